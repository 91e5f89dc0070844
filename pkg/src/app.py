"""
graphpq - critical points of quasilinear (p,q)-Laplacian systems on weighted graphs.

This is the main entry point for the command-line tool.
Run with: python -m src.app <command> [options]
"""

import sys
from typing import List, Optional

from src.services.logging_service import get_logger, setup_logging
from src.ui.cli import run


def main(argv: Optional[List[str]] = None) -> int:
    """
    Main entry point for graphpq.

    Returns:
        Exit code (0 success, 1 failed check, 2 nonconvergence, 3 bad input).
    """
    # Initialize basic logging first to catch early errors
    setup_logging()
    logger = get_logger(__name__)

    try:
        return run(argv)
    except KeyboardInterrupt:
        logger.warning("Interrupted")
        return 130
    except Exception as e:
        # Log any unhandled exceptions
        logger.critical(f"Fatal error: {e}", exc_info=True)
        return 1


if __name__ == "__main__":
    sys.exit(main())
