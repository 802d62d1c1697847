"""
配置管理模块
支持从 config.yaml 或环境变量加载数值默认值
"""

import os
from pathlib import Path
from typing import Optional
from pydantic import BaseModel, Field
import yaml
import logging

logger = logging.getLogger("gagliardo-config")


class QuadratureConfig(BaseModel):
    """积分与格点求和配置"""
    tol: float = 1e-8  # 构型能量的绝对误差
    kernel_terms: int = 64  # 周期核的截断项数 K
    gauss_order: int = 8  # 复合 Gauss-Legendre 每段节点数
    oracle_nodes: int = 256  # 暴力 oracle 每个轴的节点数
    geometric_levels: int = 24  # t -> 0 附近的几何分段层数
    quad_limit: int = 200  # scipy quad 的子区间上限


class MollifierConfig(BaseModel):
    """磨光子配置"""
    table_size: int = 4096  # H_eps 插值表大小
    zone_order: int = 24  # 过渡区每段 Gauss-Legendre 节点数
    support_order: int = 32  # rho_eps 支集上的节点数


class VariationConfig(BaseModel):
    """变分计算配置"""
    pv_tol: float = 1e-11  # 主值积分的绝对误差
    fd_step: float = 1e-5  # 有限差分步长


class DescentConfig(BaseModel):
    """下降法配置"""
    max_iters: int = 500
    grad_tol: float = 1e-8
    initial_step: float = 1.0
    shrink: float = 0.5
    armijo: float = 1e-4
    max_backtracks: int = 50
    min_gap_floor: float = 0.0
    method: str = "gradient"  # gradient, newton


class SweepConfig(BaseModel):
    """极限扫描配置"""
    s_min: float = 0.02
    s_max: float = 0.99
    smooth_nodes: int = 1024  # 光滑函数相关函数的梯形节点数


class RuntimeConfig(BaseModel):
    """运行时配置"""
    threads: int = 1
    log_level: str = "info"


class Config(BaseModel):
    """主配置类"""
    quadrature: QuadratureConfig = Field(default_factory=QuadratureConfig)
    mollifier: MollifierConfig = Field(default_factory=MollifierConfig)
    variation: VariationConfig = Field(default_factory=VariationConfig)
    descent: DescentConfig = Field(default_factory=DescentConfig)
    sweep: SweepConfig = Field(default_factory=SweepConfig)
    runtime: RuntimeConfig = Field(default_factory=RuntimeConfig)


def find_config_file() -> Optional[Path]:
    """查找配置文件，按优先级搜索"""
    # 优先级顺序：
    # 1. 环境变量指定的路径
    # 2. 当前目录
    # 3. 用户主目录
    # 4. /etc/gagliardo/

    search_paths = []

    env_path = os.environ.get("GAGLIARDO_CONFIG")
    if env_path:
        search_paths.append(Path(env_path))

    search_paths.extend([
        Path.cwd() / "config.yaml",
        Path.cwd() / ".gagliardo" / "config.yaml",
    ])

    home = Path.home()
    search_paths.extend([
        home / ".gagliardo" / "config.yaml",
        home / ".config" / "gagliardo" / "config.yaml",
    ])

    search_paths.append(Path("/etc/gagliardo/config.yaml"))

    for path in search_paths:
        if path.exists():
            logger.debug(f"Found config file: {path}")
            return path

    return None


def load_config(config_path: Optional[Path] = None) -> Config:
    """加载配置文件"""
    if config_path is None:
        config_path = find_config_file()

    if config_path and config_path.exists():
        logger.info(f"Loading config from: {config_path}")
        with open(config_path, "r", encoding="utf-8") as f:
            data = yaml.safe_load(f) or {}
        config = Config(**data)
    else:
        logger.info("No config file found, using defaults")
        config = Config()

    # 环境变量覆盖
    config.runtime.threads = max(1, int(os.environ.get("GAGLIARDO_THREADS", config.runtime.threads)))
    config.quadrature.tol = float(os.environ.get("GAGLIARDO_TOL", config.quadrature.tol))
    config.runtime.log_level = os.environ.get("GAGLIARDO_LOG_LEVEL", config.runtime.log_level)

    return config


# 全局配置实例
_config: Optional[Config] = None


def get_config() -> Config:
    """获取全局配置实例"""
    global _config
    if _config is None:
        _config = load_config()
    return _config


def reload_config() -> Config:
    """重新加载配置"""
    global _config
    _config = load_config()
    return _config
