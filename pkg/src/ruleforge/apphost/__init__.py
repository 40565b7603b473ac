"""Command line and HTTP hosting for the synthesis workbench."""
