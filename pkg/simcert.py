#!/usr/bin/env python3
"""
simcert - policy-aware minimax simulator learning

Usage:
    simcert verify [--suite NAME]... [--mdp FILE --model FILE]
    simcert train-tv | train-w1 [--env ENV]
    simcert active [--env ENV]
    simcert reproduce-narrow-passage | bias-study | stability
    simcert report [RUN_DIR]

This is the main entry point that delegates to the simcert package.
"""

from simcert.core import main

if __name__ == '__main__':
    main()
