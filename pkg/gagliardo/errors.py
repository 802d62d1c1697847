"""
错误类型

所有库异常都带有 kind (类名) 与退出码，命令行据此返回
2 (参数/校验错误) 或 3 (数值失败)。
"""

from typing import Dict

EXIT_USAGE = 2
EXIT_NUMERICAL = 3
EXIT_IO = 4


class GagliardoError(Exception):
    """库异常基类"""
    exit_code: int = EXIT_NUMERICAL

    def __init__(self, message: str = ""):
        super().__init__(message)
        self.message = message

    @property
    def kind(self) -> str:
        return type(self).__name__

    def to_dict(self) -> Dict[str, str]:
        return {"kind": self.kind, "message": self.message}


# ============== 校验错误 ==============

class ValidationFailure(GagliardoError):
    """输入不满足前置条件"""
    exit_code = EXIT_USAGE


class InvalidConfiguration(ValidationFailure):
    """构型非法: 点数不等于 T、非有限值、不可行的最小间距"""


class InvalidParameters(ValidationFailure):
    """(s, p, T, d) 或磨光半径不合法"""


class InvalidInterval(ValidationFailure):
    """区间端点 a > b"""


class InvalidRadius(ValidationFailure):
    """截断半径 R <= 2T√d"""


class WrongRegime(ValidationFailure):
    """公式不适用于当前的 (s, p) 区域"""


class NotOverlapping(ValidationFailure):
    """跳点重数为 1，分离泛函无定义"""


# ============== 数值错误 ==============

class SingularArgument(GagliardoError):
    """核在 t <= 0 处求值"""


class DivergentEnergy(GagliardoError):
    """sp >= 1 时构型能量为无穷"""


class CuspPoint(GagliardoError):
    """重叠跳点处的单侧导数为无穷"""


class StalledDescent(GagliardoError):
    """线搜索连续失败"""


class CuspEncountered(GagliardoError):
    """精确模式下迭代点出现重叠跳点 (建议加扰动重启，不会自动执行)"""
