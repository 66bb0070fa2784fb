import sys

import config_util.logging as log
from harness.cli import main

if __name__ == '__main__':
    log.init_logging('sparse_poincare')
    sys.exit(main())
