# native Python packages
import os

# third-party packages
from dotenv import load_dotenv

# custom packages
from datajobs.llm_volatility.cli import STAGES
from utils.config import load_config


if __name__ == "__main__":
    load_dotenv()

    project_root = os.getenv("PROJECT_ROOT", ".")
    config = load_config(os.path.join(project_root, "configs", "synthetic.toml"))

    for _, stage, _ in STAGES:
        stage(config)
