"""Entry point for python -m rtmpc_il."""

from .cli import main

if __name__ == "__main__":
    main()
