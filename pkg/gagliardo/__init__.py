"""
gagliardo-energy - 周期分数阶 (s,p)-Gagliardo 能量的数值库与命令行工具
"""

__version__ = "0.1.0"
