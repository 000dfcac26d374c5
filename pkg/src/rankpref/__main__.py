import sys

from rankpref.cli import main

sys.exit(main())
