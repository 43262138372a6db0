# run.py
import sys

from jobs.tomo_cli import main

if __name__ == "__main__":
    sys.exit(main())
