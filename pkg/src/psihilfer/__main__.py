import sys

from psihilfer.cli import main

sys.exit(main())
