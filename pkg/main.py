import sys

from kernseq.app import main

# ==========================================================================================
# ==========================================================================================

# File:    main.py
# Date:    October 18, 2026
# Author:  Jonathan A. Webb
# Purpose: Run the full kernseq pipeline on the bundled toy corpus
# ==========================================================================================
# ==========================================================================================


if __name__ == "__main__":
    sys.exit(main(["run", "--config", "data/config/kernseq_config.json"]))

# ==========================================================================================
# ==========================================================================================
# eof
