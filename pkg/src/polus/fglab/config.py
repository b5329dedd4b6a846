"""This module contains the global configuration of fglab."""
import os
from dotenv import load_dotenv, find_dotenv

# Load environment variables from first .env file found in a parent hierarchy
load_dotenv(find_dotenv(), override=True)

# log level for the whole application
os.environ.setdefault("FGLAB_LOG_LEVEL", "INFO")
FGLAB_LOG_LEVEL = os.environ.get("FGLAB_LOG_LEVEL")

# storage budget for the terms of a single series
os.environ.setdefault("FGLAB_MAX_MEMORY_MB", "512")
FGLAB_MAX_MEMORY_MB = int(os.environ.get("FGLAB_MAX_MEMORY_MB"))

# approximate footprint of one stored term (exponent tuple + rational)
BYTES_PER_TERM = 200

# alternative representatives tried per earlier solver stage
os.environ.setdefault("FGLAB_SOLVER_RETRIES", "2")
FGLAB_SOLVER_RETRIES = int(os.environ.get("FGLAB_SOLVER_RETRIES"))

# largest leading valuation tried by the generator solver
os.environ.setdefault("FGLAB_MAX_LEADING_VALUATION", "12")
FGLAB_MAX_LEADING_VALUATION = int(os.environ.get("FGLAB_MAX_LEADING_VALUATION"))

os.environ.setdefault("FGLAB_PROGRESS", "False")
FGLAB_PROGRESS = os.environ.get("FGLAB_PROGRESS").lower() in ("1", "true", "yes")

os.environ.setdefault("FGLAB_DEFAULT_CAP", "16")
FGLAB_DEFAULT_CAP = int(os.environ.get("FGLAB_DEFAULT_CAP"))
