#!/usr/bin/env python3
"""
Setup script for ppgmres: writes a .env with the run settings
"""

import os


def ask(prompt: str, default: str) -> str:
    return input(f"{prompt} [{default}]: ").strip() or default


def create_env_file():
    """Create .env file if it doesn't exist"""
    env_path = ".env"

    if os.path.exists(env_path):
        print("✅ .env file already exists")
        return True

    print("🔧 Creating .env file...")

    output_dir = ask("Directory for reports", "results")
    seed = ask("Default seed", "7")
    log_level = ask("Log level", "INFO")
    log_file = input("Log file (empty for stdout only): ").strip()
    small_eig_cap = ask("Largest dense eigenproblem", "512")
    max_mvp = ask("Matrix-vector product budget per run", "2000000")

    for name, value in (("seed", seed), ("dense eigenproblem size", small_eig_cap), ("budget", max_mvp)):
        if not value.isdigit():
            print(f"❌ {name} must be a non-negative integer, got {value!r}")
            return False

    env_content = f"""PPGMRES_OUTPUT_DIR={output_dir}
PPGMRES_SEED={seed}
PPGMRES_LOG_LEVEL={log_level.upper()}
PPGMRES_LOG_FILE={log_file}
PPGMRES_SMALL_EIG_CAP={small_eig_cap}
PPGMRES_MAX_MVP={max_mvp}
"""

    with open(env_path, 'w') as f:
        f.write(env_content)

    print("✅ .env file created successfully!")
    return True


def main():
    """Main setup function"""
    print("📐 ppgmres Setup")
    print("=" * 30)

    if not create_env_file():
        return

    print("\n🚀 Setup complete!")
    print("\nNext steps:")
    print("1. Solve a preset problem: uv run python run.py solve --matrix example1 --d 50 --balance b1")
    print("2. Run the quick tests: uv run pytest -m 'not slow'")
    print("\n📖 Check COMMANDS.md for more examples")


if __name__ == "__main__":
    main()
