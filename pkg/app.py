"""Clark toolkit launcher.

Usage:
    python app.py example zw
    python app.py verify --rif fave --alpha 1.5707963 --tol-profile singular
"""

import sys
from pathlib import Path

# Add src to path for imports
sys.path.insert(0, str(Path(__file__).parent))

from src.cli import app

if __name__ == "__main__":
    app()
