"""Run the stefan command-line tool without installing the package."""
from stefan.main import app

if __name__ == "__main__":
    app()
