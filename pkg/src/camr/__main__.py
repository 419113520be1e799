import sys

from camr.cli import main

sys.exit(main())
