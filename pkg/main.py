# native Python packages
import os
import sys

# third-party packages
from dotenv import load_dotenv

load_dotenv()
project_root = os.getenv("PROJECT_ROOT")
if project_root and project_root not in sys.path:
    sys.path.append(project_root)

# custom packages
from datajobs.llm_volatility.cli import cli  # noqa: E402

if __name__ == "__main__":
    cli()
