import sys

from fraclie.cli import main

sys.exit(main())
