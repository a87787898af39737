import sys

from tensorscape.cli import main

sys.exit(main())
