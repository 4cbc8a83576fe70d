"""
This module contains the terminal user interface.

### Submodules

- **terminal**: Terminal user interface
- **config**: Configuration file and command line arguments
"""
