"""
ontonorm command-line entry point

Usage: python main.py <command> [flags]   (same as the installed `ontonorm` script)
"""

from ontonorm.cli.main import main

if __name__ == "__main__":
    main()
