import sys

from rissec.cli import main

sys.exit(main())
