import sys

from gmoea.harness import main

sys.exit(main())
