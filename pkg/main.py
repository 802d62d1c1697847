"""
gagliardo 主入口
周期分数阶 (s,p)-Gagliardo 能量
"""

import sys

from gagliardo.cli import main

if __name__ == "__main__":
    sys.exit(main())
