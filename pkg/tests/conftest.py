import sys
from pathlib import Path

# make the shared helpers (synth, oracles) importable from any test module
sys.path.insert(0, str(Path(__file__).resolve().parent))
