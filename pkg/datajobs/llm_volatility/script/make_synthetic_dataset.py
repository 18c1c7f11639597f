# native Python packages
import os
from datetime import date

# third-party packages
from dotenv import load_dotenv

# custom packages
from datajobs.llm_volatility.synthetic_data import generate_dataset


if __name__ == "__main__":
    load_dotenv()

    project_root = os.getenv("PROJECT_ROOT", ".")
    output_dir = os.path.join(project_root, "datasets", "synthetic", "raw")

    generate_dataset(output_dir, n_headlines=1000, start=date(2024, 1, 2), n_days=120, seed=7)
