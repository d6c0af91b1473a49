import sys

from kontinued.cli import main

sys.exit(main())
