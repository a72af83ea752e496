"""
main.py

Development runner for echoscope: runs the full pipeline on the bundled
example corpus, or forwards any arguments to the ``echoscope`` command.

Run:
>>>  uv run python main.py
>>>  uv run python main.py synth pair --output planted.csv
"""

import sys

from echoscope.cli import main

EXAMPLE_RUN = ["run", "--config", "data/example/config.json", "--figures"]

if __name__ == "__main__":
    print("\n🏃‍♂️ echoscope starting (dev)...")
    sys.exit(main(sys.argv[1:] or EXAMPLE_RUN))
