import sys

from netemp.cli import main

sys.exit(main())
