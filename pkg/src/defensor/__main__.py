import sys

from defensor.cli import main

sys.exit(main())
