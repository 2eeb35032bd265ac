import sys

from endres.cli import main

sys.exit(main())
