"""
coded-groupcast entry point.

    python launcher.py bounds --n 3 --m 3 --M 1 --L 2 --exact
"""
import os
import sys

# Add project root and src folder to path
BASE_DIR = os.path.dirname(os.path.abspath(__file__))
sys.path.insert(0, BASE_DIR)
sys.path.insert(0, os.path.join(BASE_DIR, 'src'))

from src.cli import main
from src.utils.log import install_crash_handler


def run(argv=None) -> int:
    install_crash_handler()
    return main(argv)


if __name__ == "__main__":
    sys.exit(run())
