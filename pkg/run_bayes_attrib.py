#!/usr/bin/env python3
"""
Bayes Attrib Runner
Start the bayes_attrib command line from a source checkout
"""

import os
import sys


def main():
    """Run the command line with the repository root on the import path"""
    sys.path.insert(0, os.path.dirname(os.path.abspath(__file__)))
    from bayes_attrib.main import main as cli_main

    return cli_main(sys.argv[1:])


if __name__ == "__main__":
    sys.exit(main())
