import sys

from listfb.cli import main

sys.exit(main())
