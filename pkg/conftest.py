import os
import sys

# Make Simulation/ and Harness/ importable from tests/
sys.path.insert(0, os.path.dirname(os.path.abspath(__file__)))
