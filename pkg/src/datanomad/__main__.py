import sys

from datanomad.cli import main

sys.exit(main())
