from pathlib import Path
import sys

# tests import the package as src.<module>, as the entry point does
sys.path.insert(0, str(Path(__file__).resolve().parent))
