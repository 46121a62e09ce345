import sys

from views.main_view import MainView

if __name__ == "__main__":
    app = MainView()
    sys.exit(app.run())
