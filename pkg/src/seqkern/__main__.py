"""Module entry point: ``python -m seqkern`` mirrors the ``seqkern`` script."""

from .cli import main

if __name__ == "__main__":
    main()
