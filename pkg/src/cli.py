# Copyright 2024 The decmon developers
#
# This file is part of decmon.
#
# decmon is free software: you can redistribute it and/or modify it
# under the terms of the GNU General Public License as published by
# the Free Software Foundation, either version 3 of the License, or
# (at your option) any later version.
#
# decmon is distributed in the hope that it will be useful, but
# WITHOUT ANY WARRANTY; without even the implied warranty of
# MERCHANTABILITY or FITNESS FOR A PARTICULAR PURPOSE.
# See the GNU General Public License for more details.
#
# You should have received a copy of the GNU General Public License
# along with decmon. If not, see <https://www.gnu.org/licenses/>.

"""
The `decmon` console script. Subcommands (compile, run, oracle, trace-gen, bench) live in `decmon.ui.terminal`; this
module only turns Ctrl-C into exit code 130. A benchmark interrupted this way leaves no partial CSV behind.
"""

import sys
from typing import List, Optional

from decmon.ui import terminal

EXIT_INTERRUPTED = 130


def main(argv: Optional[List[str]] = None) -> None:
    try:
        terminal.main(argv)
    except KeyboardInterrupt:
        print("\n\nInterrupted, no further runs were started.")
        sys.exit(EXIT_INTERRUPTED)


if __name__ == "__main__":
    main()
