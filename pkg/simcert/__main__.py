#!/usr/bin/env python3
"""
Entry point for running simcert as a module.
Allows: python -m simcert
"""

from .core import main

if __name__ == '__main__':
    main()
