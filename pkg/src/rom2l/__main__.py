"""Run the command line interface as ``python -m rom2l``."""

from .cli import script_entry

if __name__ == "__main__":
    script_entry()
