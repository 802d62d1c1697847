"""
gagliardo 测试套件
"""

import json
import math

import numpy as np
import pytest
from numpy.testing import assert_allclose


def sin_u(x):
    return np.sin(2.0 * np.pi * np.asarray(x))


# 测试配置模块
class TestConfig:
    def test_default_config(self):
        """测试默认配置"""
        from gagliardo.config import Config

        config = Config()
        assert config.quadrature.tol == 1e-8
        assert config.quadrature.kernel_terms == 64
        assert config.mollifier.table_size == 4096
        assert config.descent.method == "gradient"
        assert config.runtime.threads == 1

    def test_config_from_file(self, tmp_path):
        """测试从 YAML 文件加载"""
        from gagliardo.config import load_config

        path = tmp_path / "config.yaml"
        path.write_text("quadrature:\n  gauss_order: 12\ndescent:\n  method: newton\n", encoding="utf-8")
        config = load_config(path)
        assert config.quadrature.gauss_order == 12
        assert config.descent.method == "newton"
        assert config.sweep.smooth_nodes == 1024

    def test_config_from_env(self, monkeypatch, tmp_path):
        """测试环境变量覆盖"""
        monkeypatch.setenv("GAGLIARDO_THREADS", "3")
        monkeypatch.setenv("GAGLIARDO_TOL", "1e-6")
        monkeypatch.setenv("GAGLIARDO_LOG_LEVEL", "debug")

        from gagliardo.config import load_config
        config = load_config(tmp_path / "missing.yaml")

        assert config.runtime.threads == 3
        assert config.quadrature.tol == 1e-6
        assert config.runtime.log_level == "debug"

    def test_reload_config(self, monkeypatch, tmp_path):
        """测试重新加载全局配置"""
        from gagliardo.config import get_config, reload_config

        path = tmp_path / "custom.yaml"
        path.write_text("quadrature:\n  gauss_order: 12\n", encoding="utf-8")
        monkeypatch.setenv("GAGLIARDO_CONFIG", str(path))
        try:
            assert reload_config().quadrature.gauss_order == 12
            assert get_config().quadrature.gauss_order == 12
        finally:
            monkeypatch.delenv("GAGLIARDO_CONFIG")
            reload_config()


# 测试构型与参数
class TestDomain:
    def test_params_validation(self):
        """测试参数校验"""
        from gagliardo.domain import Regime, make_params
        from gagliardo.errors import InvalidParameters

        assert make_params(0.5, 2.0).regime() == Regime.CRITICAL
        assert make_params(0.25, 2.0).regime() == Regime.SUB_CRITICAL
        assert make_params(0.75, 2.0).regime() == Regime.SUPER_CRITICAL
        for s, p in [(0.0, 2.0), (1.0, 2.0), (0.5, 0.5), (0.5, float("inf"))]:
            with pytest.raises(InvalidParameters):
                make_params(s, p)

    def test_configuration_canonical(self):
        """测试模 T 归约与排序"""
        from gagliardo.domain import make_configuration
        from gagliardo.errors import InvalidConfiguration

        config = make_configuration([3.5, 0.25, 1.0], 3)
        assert config.points == (0.25, 0.5, 1.0)
        assert_allclose(config.gaps(), [0.25, 0.5, 2.25])
        with pytest.raises(InvalidConfiguration):
            make_configuration([0.0, 1.0], 3)
        with pytest.raises(InvalidConfiguration):
            make_configuration([0.0, float("nan")], 2)

    def test_configuration_json(self):
        """测试 JSON 往返与缺字段"""
        from gagliardo.domain import Configuration, make_configuration
        from gagliardo.errors import InvalidConfiguration

        config = make_configuration([0.1, 1.7], 2)
        assert Configuration.from_json(config.to_json()) == config
        with pytest.raises(InvalidConfiguration):
            Configuration.from_json({"points": [0.0]})

    def test_random_configuration(self):
        """测试随机构型可复现且满足最小间距"""
        from gagliardo.domain import random_configuration
        from gagliardo.errors import InvalidConfiguration

        a = random_configuration(6, 0.2, seed=7)
        b = random_configuration(6, 0.2, seed=7)
        assert a == b
        assert a.min_gap >= 0.2
        assert_allclose(a.gaps().sum(), 6.0)
        with pytest.raises(InvalidConfiguration):
            random_configuration(3, 1.5, seed=0)

    @pytest.mark.parametrize("T,min_gap", [(2, 0.5), (3, 0.9), (6, 0.2), (12, 0.05)])
    def test_random_configuration_min_gap_exact(self, T, min_gap):
        """测试最小间距不因舍入低于下限"""
        from gagliardo.domain import random_configuration

        for seed in range(20):
            config = random_configuration(T, min_gap, seed)
            assert config.min_gap >= min_gap
            assert config.is_regular

    def test_is_regular(self):
        """测试重合跳点的构型不是正则构型"""
        from gagliardo.domain import equispaced, make_configuration

        assert equispaced(3).is_regular
        assert not make_configuration([0.5, 0.5, 2.0], 3).is_regular

    def test_representative_mean_zero(self):
        """测试代表元周期内均值为零"""
        from gagliardo.domain import PiecewiseAffineRepresentative, random_configuration

        config = random_configuration(4, 0.1, seed=11)
        u = PiecewiseAffineRepresentative(config)
        n = 400_000
        x = (np.arange(n) + 0.5) * (4.0 / n)
        assert abs(u(x).mean()) < 1e-4

    def test_representative_jumps(self):
        """测试斜率为 1、跳点处下跳 1、右连续、周期性"""
        from gagliardo.domain import PiecewiseAffineRepresentative, make_configuration

        config = make_configuration([0.3, 1.1, 2.6], 3)
        u = PiecewiseAffineRepresentative(config)
        for xj in config.points:
            assert_allclose(u(xj) - u.left_limit(xj), -1.0, atol=1e-12)
            assert_allclose(u(xj + 0.01) - u(xj), 0.01, atol=1e-12)
        x = np.linspace(0.0, 3.0, 17)
        assert_allclose(u(x + 3.0), u(x), atol=1e-12)

    def test_evaluate_u(self):
        """测试标量与向量求值"""
        from gagliardo.domain import PiecewiseAffineRepresentative, equispaced, evaluate_u

        config = equispaced(2)
        value = evaluate_u(config, 0.25)
        assert isinstance(value, float)
        assert_allclose(value, -0.25, atol=1e-12)
        assert_allclose(evaluate_u(config, [0.25, 1.5]), PiecewiseAffineRepresentative(config)([0.25, 1.5]))

    def test_overlapping_jump(self):
        """测试重合跳点的下跳等于重数"""
        from gagliardo.domain import PiecewiseAffineRepresentative, make_configuration

        config = make_configuration([0.5, 0.5], 2)
        u = PiecewiseAffineRepresentative(config)
        assert config.multiplicity(0) == 2
        assert_allclose(u(0.5) - u.left_limit(0.5), -2.0, atol=1e-12)

    def test_jump_count(self):
        """测试闭区间计数与半开窗口"""
        from gagliardo.domain import JumpCountMeasure, equispaced, jump_count
        from gagliardo.errors import InvalidInterval

        assert jump_count(equispaced(3), 0.0, 3.0) == 4
        assert jump_count(equispaced(3), 0.5, 0.5) == 0
        with pytest.raises(InvalidInterval):
            jump_count(equispaced(3), 1.0, 0.0)
        measure = JumpCountMeasure(equispaced(2))
        assert measure.window(0.0, 1.0) == 1
        assert measure.window(0.5, 1.0) == 1

    @pytest.mark.parametrize("t", [0.2, 0.9, 1.7, 2.95])
    def test_level_measures_mass(self, t):
        """测试 Σ|A_t(k)| = T 与 Σ k|A_t(k)| = T·t"""
        from gagliardo.domain import JumpCountMeasure, random_configuration

        config = random_configuration(3, 0.05, seed=5)
        measures = JumpCountMeasure(config).level_measures(t)
        assert_allclose(sum(measures.values()), 3.0, atol=1e-12)
        assert_allclose(sum(k * m for k, m in measures.items()), 3.0 * t, atol=1e-12)

    def test_unit_sphere_area(self):
        """测试单位球面面积"""
        from gagliardo.domain import unit_sphere_area

        assert_allclose(unit_sphere_area(1), 2.0)
        assert_allclose(unit_sphere_area(2), 2.0 * math.pi)
        assert_allclose(unit_sphere_area(3), 4.0 * math.pi)


# 测试周期核与相关函数
class TestQuadrature:
    def test_kernel_basel(self):
        """测试 K(1) 在 T = 1, sp = 1 时为 π²/6"""
        from gagliardo.quadrature import lattice_kernel, periodic_kernel

        assert_allclose(lattice_kernel(1.0, 1.0, 1.0), math.pi ** 2 / 6.0, rtol=1e-12)
        kv = periodic_kernel(1.0, 1.0, 1.0)
        assert abs(kv.value - math.pi ** 2 / 6.0) < 1e-8

    def test_kernel_single_term(self):
        """测试 K = 1 时部分和只有首项，尾项夹住精确值"""
        from gagliardo.quadrature import periodic_kernel

        kv = periodic_kernel(1.0, 2.0, 0.5, K=1)
        assert kv.partial == 1.0
        assert kv.tail.lower <= kv.exact - kv.partial <= kv.tail.upper
        assert abs(kv.value - kv.exact) <= (kv.tail.upper - kv.tail.lower) / 2.0 + 1e-15

    @pytest.mark.parametrize("t", [0.01, 0.5, 1.99])
    def test_tail_bracket(self, t):
        """测试尾项上下界夹住 Hurwitz zeta"""
        from gagliardo.quadrature import kernel_partial, kernel_tail_bracket, lattice_kernel

        for K in (1, 4, 32):
            lo, hi = kernel_tail_bracket(t, 2.0, 0.6, K)
            rest = lattice_kernel(t, 2.0, 0.6) - kernel_partial(t, 2.0, 0.6, K)
            assert lo <= rest <= hi

    def test_kernel_rejects_zero(self):
        """测试 t <= 0 报错"""
        from gagliardo.errors import SingularArgument
        from gagliardo.quadrature import periodic_kernel

        with pytest.raises(SingularArgument):
            periodic_kernel(0.0, 1.0, 0.5)

    def test_profile_equispaced(self):
        """测试 T = 1 时 g(t) = t(1-t)"""
        from gagliardo.domain import equispaced
        from gagliardo.quadrature import correlation_profile

        profile = correlation_profile(equispaced(1), 2.0)
        assert_allclose(profile(0.3), 0.21, rtol=1e-12)
        assert profile.mass_residual() < 1e-9

    @pytest.mark.parametrize("p", [1.0, 1.5, 2.0, 3.0])
    def test_profile_matches_direct(self, p):
        """测试分段相关函数与直接积分一致"""
        from gagliardo.domain import PiecewiseAffineRepresentative, random_configuration
        from gagliardo.quadrature import correlation_profile, direct_correlation

        config = random_configuration(3, 0.1, seed=2)
        profile = correlation_profile(config, p)
        u = PiecewiseAffineRepresentative(config)
        assert profile.mass_residual() < 1e-9
        for t in (0.05, 0.7, 1.35, 2.4):
            expected = direct_correlation(u, t, p, 3, jumps=config.points)
            assert_allclose(profile(t), expected, rtol=1e-9, atol=1e-12)

    def test_double_integral_oracle(self):
        """测试 sin 的胞内双积分为 1"""
        from gagliardo.quadrature import double_integral_oracle

        assert_allclose(double_integral_oracle(sin_u, 2.0, 1), 1.0, rtol=1e-9)


# 测试能量
class TestEnergy:
    def test_energy_config_equispaced(self):
        """测试 T = 1 等距构型能量与独立积分一致"""
        from scipy import integrate, special
        from gagliardo.domain import equispaced, make_params
        from gagliardo.energy import energy_config

        s, p = 0.25, 2.0
        sp = s * p
        a = 1.0 + sp
        report = energy_config(equispaced(1), make_params(s, p))

        def h(t):
            return (1.0 - t) * (1.0 + t ** a * special.zeta(a, 1.0 + t))

        value, _ = integrate.quad(h, 0.0, 1.0, weight="alg", wvar=(-sp, 0.0), epsabs=1e-13)
        assert_allclose(report.value, 2.0 * value, rtol=1e-8)
        assert report.tail_lower <= report.tail_upper

    def test_energy_config_divergent(self):
        """测试 sp >= 1 时构型能量发散"""
        from gagliardo.domain import equispaced, make_params
        from gagliardo.energy import energy_config
        from gagliardo.errors import DivergentEnergy

        with pytest.raises(DivergentEnergy):
            energy_config(equispaced(2), make_params(0.5, 2.0, 2))

    @pytest.mark.parametrize("s,p", [(0.3, 2.0), (0.45, 1.5), (0.2, 3.0)])
    def test_energy_translation_invariant(self, s, p):
        """测试平移不变性 (相对 1e-9)"""
        from gagliardo.domain import make_params, random_configuration
        from gagliardo.energy import energy_config

        config = random_configuration(3, 0.2, seed=4)
        params = make_params(s, p, 3)
        for shift in (0.37, 1.91):
            assert_allclose(energy_config(config.translate(shift), params, tol=1e-12).value,
                            energy_config(config, params, tol=1e-12).value, rtol=1e-9)

    @pytest.mark.parametrize("T", [2, 3, 5])
    def test_equispaced_energy_quiet(self, T, caplog):
        """测试等距构型求能量时没有求积警告"""
        import logging
        from gagliardo.domain import equispaced, make_params
        from gagliardo.energy import energy_config

        with caplog.at_level(logging.WARNING, logger="gagliardo-quadrature"):
            energy_config(equispaced(T), make_params(0.3, 2.0, T))
        assert not [r for r in caplog.records if r.levelno >= logging.WARNING]

    @pytest.mark.parametrize("seed", range(5))
    @pytest.mark.parametrize("T,s,p", [(2, 0.3, 2.0), (3, 0.4, 1.5)])
    def test_energy_config_vs_oracle(self, seed, T, s, p):
        """测试随机构型上与 (x, y) 张量 oracle 交叉验证"""
        from gagliardo.domain import PiecewiseAffineRepresentative, make_params, random_configuration
        from gagliardo.energy import energy_config
        from gagliardo.quadrature import cell_pair_oracle

        config = random_configuration(T, 0.1, seed)
        exact = energy_config(config, make_params(s, p, T))
        oracle = cell_pair_oracle(PiecewiseAffineRepresentative(config), s, p, T,
                                  jumps=config.points)
        assert_allclose(oracle.value, exact.value, rtol=1e-4)

    def test_oracle_equispaced_unit(self):
        """测试单位周期等距构型在 s = 0.25, p = 2 时的高精度一致"""
        from gagliardo.domain import PiecewiseAffineRepresentative, equispaced, make_params
        from gagliardo.energy import energy_config
        from gagliardo.quadrature import cell_pair_oracle

        config = equispaced(1)
        exact = energy_config(config, make_params(0.25, 2.0, 1))
        oracle = cell_pair_oracle(PiecewiseAffineRepresentative(config), 0.25, 2.0, 1,
                                  jumps=config.points)
        assert_allclose(oracle.value, exact.value, rtol=1e-6)

    def test_oracle_report(self):
        """测试 oracle 的远场夹逼与节点计数"""
        from gagliardo.domain import PiecewiseAffineRepresentative, make_configuration
        from gagliardo.quadrature import cell_pair_oracle

        config = make_configuration([0.2, 1.5], 2)
        u = PiecewiseAffineRepresentative(config)
        coarse = cell_pair_oracle(u, 0.3, 2.0, 2, K=4, n=128, jumps=config.points)
        fine = cell_pair_oracle(u, 0.3, 2.0, 2, K=32, n=128, jumps=config.points)
        assert 0.0 < coarse.tail_lower < coarse.tail_upper
        assert fine.tail_upper < coarse.tail_upper
        assert fine.nodes > coarse.nodes > 0
        # 远场二阶展开的截断误差远小于夹逼宽度
        assert abs(fine.value - coarse.value) < 0.05 * coarse.abs_err_est

    def test_oracle_rejects_supercritical_jumps(self):
        """测试有跳时 sp >= 1 的 oracle 直接报发散"""
        from gagliardo.domain import PiecewiseAffineRepresentative, make_configuration
        from gagliardo.errors import DivergentEnergy
        from gagliardo.quadrature import cell_pair_oracle

        config = make_configuration([0.2, 1.5], 2)
        with pytest.raises(DivergentEnergy):
            cell_pair_oracle(PiecewiseAffineRepresentative(config), 0.5, 2.0, 2, jumps=config.points)

    @pytest.mark.parametrize("s", [0.1, 0.3, 0.45])
    def test_energy_smooth_sin(self, s):
        """测试 sin(2πx) 在 p = 2 时的闭式能量"""
        from gagliardo.domain import make_params
        from gagliardo.energy import energy_smooth

        expected = 2.0 * (2.0 * math.pi) ** (2.0 * s) * (-math.gamma(-2.0 * s)) * math.cos(math.pi * s)
        report = energy_smooth(sin_u, make_params(s, 2.0))
        assert_allclose(report.value, expected, rtol=1e-6)

    def test_segment_pair(self):
        """测试线段对积分"""
        from gagliardo.energy import centered_segment_pair, segment_pair_integral

        assert_allclose(segment_pair_integral(0.5, 0.5, 0.0, 2.0), 1.0 / 6.0, rtol=1e-12)
        assert_allclose(centered_segment_pair(0.3, 0.7, 2.5),
                        segment_pair_integral(0.3, 0.7, 0.0, 2.5), rtol=1e-12)
        assert segment_pair_integral(0.0, 0.7, 0.1, 2.0) == 0.0

    @pytest.mark.parametrize("p", [1.0, 2.0, 3.5])
    def test_segment_pair_derivatives(self, p):
        """测试闭式导数与差商一致"""
        from gagliardo.energy import (
            centered_segment_pair,
            centered_segment_pair_gradient,
            segment_pair_integral,
            segment_pair_offset_curvature,
        )

        l, lp, c, h = 0.4, 0.7, 0.2, 1e-4
        fd = (centered_segment_pair(l + h, lp, p) - centered_segment_pair(l - h, lp, p)) / (2.0 * h)
        assert_allclose(centered_segment_pair_gradient(l, lp, p), fd, rtol=1e-6)
        second = (segment_pair_integral(l, lp, c + h, p) - 2.0 * segment_pair_integral(l, lp, c, p)
                  + segment_pair_integral(l, lp, c - h, p)) / h ** 2
        assert_allclose(segment_pair_offset_curvature(l, lp, c, p), second, rtol=1e-5)
        assert segment_pair_offset_curvature(l, lp, c, p) >= 0.0

    def test_energy_zero_equispaced(self):
        """测试等距构型的 F^0_p"""
        from gagliardo.domain import equispaced
        from gagliardo.energy import energy_zero, equispaced_energy_zero

        assert_allclose(energy_zero(equispaced(2), 2.0), 2.0 / 3.0, rtol=1e-12)
        assert_allclose(energy_zero(equispaced(1), 2.0), 1.0 / 6.0, rtol=1e-12)
        for T, p in [(3, 1.0), (4, 2.5)]:
            assert_allclose(energy_zero(equispaced(T), p), equispaced_energy_zero(T, p), rtol=1e-12)

    @pytest.mark.parametrize("p", [1.0, 2.0, 3.0])
    def test_jensen_chain(self, p):
        """测试 F^0_p >= Jensen 下界 >= 等距值"""
        from gagliardo.domain import random_configuration
        from gagliardo.energy import energy_zero, equispaced_energy_zero, jensen_lower_bound

        for seed in range(4):
            config = random_configuration(4, 0.0, seed)
            f0 = energy_zero(config, p)
            lower = jensen_lower_bound(config, p)
            assert f0 >= lower - 1e-12
            assert lower >= equispaced_energy_zero(4, p) - 1e-12

    @pytest.mark.parametrize("p", [2.0, 3.0])
    def test_energy_zero_vs_oracle(self, p):
        """测试线段对分解与双积分一致"""
        from gagliardo.domain import PiecewiseAffineRepresentative, random_configuration
        from gagliardo.energy import energy_zero
        from gagliardo.quadrature import double_integral_oracle

        config = random_configuration(3, 0.1, seed=9)
        u = PiecewiseAffineRepresentative(config)
        assert_allclose(energy_zero(config, p),
                        double_integral_oracle(u, p, 3, jumps=config.points), rtol=1e-9)

    def test_centered_pair_axis_convexity(self):
        """测试 f̲_p 沿坐标方向凸"""
        from gagliardo.energy import centered_segment_pair, centered_segment_pair_curvature

        h = 1e-3
        for p in (1.0, 1.5, 2.0, 4.0):
            for l in np.linspace(0.05, 1.0, 7):
                for lp in np.linspace(0.05, 1.0, 7):
                    assert centered_segment_pair_curvature(l, lp, p) >= 0.0
                    second = (centered_segment_pair(l + h, lp, p) - 2.0 * centered_segment_pair(l, lp, p)
                              + centered_segment_pair(l - h, lp, p))
                    assert second >= -1e-12

    def test_tail_sandwich(self):
        """测试尾项上下界"""
        from gagliardo.domain import make_params
        from gagliardo.energy import tail_sandwich
        from gagliardo.errors import InvalidRadius

        params = make_params(0.3, 2.0)
        bounds = tail_sandwich(1.0, 5.0, params)
        assert 0.0 < bounds.lower < bounds.upper
        assert bounds.c1 > 1.0 > bounds.c2
        with pytest.raises(InvalidRadius):
            tail_sandwich(1.0, 1.5, params)
        widths = [tail_sandwich(1.0, R, params) for R in (3.0, 5.0, 10.0)]
        widths = [b.upper - b.lower for b in widths]
        assert widths[0] > widths[1] > widths[2]

    def test_cutoff_plus_tail_contains_energy(self):
        """测试截断能量加尾项界包含完整能量"""
        from gagliardo.domain import make_params
        from gagliardo.energy import energy_smooth, tail_sandwich
        from gagliardo.quadrature import cutoff_energy, double_integral_oracle

        params = make_params(0.3, 2.0)
        full = energy_smooth(sin_u, params).value
        F0 = double_integral_oracle(sin_u, 2.0, 1)
        R = 10.0
        core = cutoff_energy(sin_u, params, R)
        bounds = tail_sandwich(F0, R, params)
        assert core + bounds.lower <= full <= core + bounds.upper

    @pytest.mark.parametrize("seed", [0, 1, 2, 3, 4])
    def test_configuration_sandwich(self, seed):
        """测试随机构型在 R = 3T, 5T, 10T 时截断能量加尾项界包含完整能量"""
        from gagliardo.domain import PiecewiseAffineRepresentative, make_params, random_configuration
        from gagliardo.energy import energy_config, tail_sandwich
        from gagliardo.quadrature import cutoff_energy, double_integral_oracle

        T = 2
        config = random_configuration(T, 0.1, seed)
        params = make_params(0.3, 2.0, T)
        u = PiecewiseAffineRepresentative(config)
        full = energy_config(config, params).value
        F0 = double_integral_oracle(u, 2.0, T, jumps=config.points)
        for R in (3.0 * T, 5.0 * T, 10.0 * T):
            core = cutoff_energy(u, params, R, jumps=config.points)
            bounds = tail_sandwich(F0, R, params)
            assert core + bounds.lower <= full <= core + bounds.upper

    def test_mollified_energy_critical_finite(self):
        """测试临界情形磨光能量有限并高于显式下界"""
        from gagliardo.domain import equispaced, make_params
        from gagliardo.energy import critical_lower_bound, mollified_energy

        config = equispaced(2)
        report = mollified_energy(config, make_params(0.5, 2.0, 2), 0.1)
        assert math.isfinite(report.value) and report.value > 0.0
        assert report.value >= critical_lower_bound(config, 2.0, 0.1, 1.0)

    def test_mollified_energy_approaches_exact(self):
        """测试亚临界情形 ε -> 0 时磨光能量趋于构型能量"""
        from gagliardo.domain import equispaced, make_params
        from gagliardo.energy import energy_config, mollified_energy

        params = make_params(0.25, 2.0, 2)
        exact = energy_config(equispaced(2), params).value
        coarse = mollified_energy(equispaced(2), params, 0.1).value
        fine = mollified_energy(equispaced(2), params, 0.02).value
        assert abs(fine - exact) < abs(coarse - exact)

    @pytest.mark.parametrize("seed", [0, 1, 2, 3, 4])
    @pytest.mark.parametrize("eps", [0.05, 0.02])
    def test_mollified_below_exact(self, seed, eps):
        """测试亚临界情形磨光不增加能量"""
        from gagliardo.domain import make_params, random_configuration
        from gagliardo.energy import energy_config, mollified_energy

        params = make_params(0.3, 2.0, 3)
        config = random_configuration(3, 0.2, seed)
        exact = energy_config(config, params)
        assert mollified_energy(config, params, eps).value <= exact.value + exact.abs_err_est + 1e-6

    def test_critical_clustered_above_equispaced(self):
        """测试临界情形聚集构型的磨光能量高于等距构型"""
        from gagliardo.domain import equispaced, make_configuration, make_params
        from gagliardo.energy import mollified_energy

        params = make_params(0.5, 2.0, 2)
        base = mollified_energy(equispaced(2), params, 0.01).value
        clustered = mollified_energy(make_configuration([0.0, 0.05], 2), params, 0.01).value
        assert clustered > base

    def test_critical_lower_bound_errors(self):
        """测试临界下界的参数检查"""
        from gagliardo.domain import equispaced
        from gagliardo.energy import critical_lower_bound
        from gagliardo.errors import InvalidRadius, WrongRegime

        with pytest.raises(WrongRegime):
            critical_lower_bound(equispaced(2), 1.0, 0.1, 1.0)
        with pytest.raises(InvalidRadius):
            critical_lower_bound(equispaced(2), 2.0, 0.1, 0.15)


# 测试磨光子
class TestMollifier:
    def test_density_normalized(self):
        """测试 ρ_ε 积分为 1，阶跃在支集外为 0/1"""
        from scipy import integrate
        from gagliardo.mollifier import MollifierSpec

        spec = MollifierSpec(0.2)
        total, _ = integrate.quad(lambda x: float(spec.density(x)), -0.2, 0.2, epsabs=1e-13)
        assert_allclose(total, 1.0, rtol=1e-10)
        assert_allclose(spec.step(np.array([-0.3, -0.2, 0.2, 0.5])), [0.0, 0.0, 1.0, 1.0])
        assert_allclose(spec.step(np.array([0.0])), [0.5], atol=1e-6)

    def test_mollified_matches_outside_zones(self):
        """测试过渡区外磨光代表元与原代表元一致"""
        from gagliardo.domain import PiecewiseAffineRepresentative, make_configuration
        from gagliardo.mollifier import MollifiedRepresentative, MollifierSpec

        config = make_configuration([0.3, 1.6, 2.2], 3)
        rep = MollifiedRepresentative(config, MollifierSpec(0.05))
        u = PiecewiseAffineRepresentative(config)
        x = np.array([0.0, 0.5, 1.0, 1.9, 2.5, 2.99])
        assert_allclose(rep(x), u(x), atol=1e-12)
        assert_allclose(rep.derivative(x), 1.0, atol=1e-12)

    def test_eps_too_large(self):
        """测试 ε >= T/2 报错"""
        from gagliardo.domain import equispaced
        from gagliardo.errors import InvalidParameters
        from gagliardo.mollifier import MollifiedRepresentative, MollifierSpec

        with pytest.raises(InvalidParameters):
            MollifiedRepresentative(equispaced(1), MollifierSpec(0.5))
        with pytest.raises(InvalidParameters):
            MollifierSpec(0.0)

    def test_correlation_matches_dense_rule(self):
        """测试磨光相关函数与稠密中点规则一致"""
        from gagliardo.domain import make_configuration
        from gagliardo.mollifier import MollifiedRepresentative, MollifierSpec

        config = make_configuration([0.25, 1.4], 2)
        rep = MollifiedRepresentative(config, MollifierSpec(0.1))
        n = 200_000
        x = (np.arange(n) + 0.5) * (2.0 / n)
        for t in (0.03, 0.5, 1.2):
            dense = float(np.sum(np.abs(rep(x + t) - rep(x)) ** 2) * (2.0 / n))
            assert_allclose(rep.correlation(np.array([t]), 2.0)[0], dense, rtol=1e-6)


# 测试变分
class TestVariations:
    def test_gradient_equispaced_zero(self):
        """测试等距构型是临界点"""
        from gagliardo.domain import equispaced, make_params
        from gagliardo.variations import gradient

        grad = gradient(equispaced(3), make_params(0.3, 2.0, 3))
        assert np.abs(grad).max() < 1e-7

    def test_gradient_matches_finite_difference(self):
        """测试刚性 Laplacian 与能量差商一致"""
        from gagliardo.domain import make_configuration, make_params
        from gagliardo.energy import energy_config
        from gagliardo.variations import gradient

        config = make_configuration([0.1, 0.9, 2.2], 3)
        params = make_params(0.3, 2.0, 3)
        grad = gradient(config, params)
        h = 1e-3
        for i in range(3):
            fd = (energy_config(config.displace(i, h), params, tol=1e-10).value
                  - energy_config(config.displace(i, -h), params, tol=1e-10).value) / (2.0 * h)
            assert_allclose(grad[i], fd, atol=1e-4, rtol=1e-4)
        assert abs(grad.sum()) < 1e-7

    def test_hessian_structure(self):
        """测试 Hessian 对称、行和为零、二次型一致"""
        from gagliardo.domain import make_params, random_configuration
        from gagliardo.variations import hessian, quadratic_form

        config = random_configuration(4, 0.2, seed=1)
        report = hessian(config, make_params(0.3, 2.0, 4), with_gradient=False)
        H = report.matrix()
        assert_allclose(H, H.T, atol=1e-14)
        assert report.row_sum_residual < 1e-10
        xi = np.array([0.3, -1.0, 0.5, 2.0])
        assert_allclose(quadratic_form(H, xi), float(xi @ H @ xi), rtol=1e-10, atol=1e-12)

    @pytest.mark.parametrize("s,p", [(0.3, 2.0), (0.45, 1.5), (0.2, 3.0)])
    def test_hessian_matches_gradient_difference(self, s, p):
        """测试 Hessian 各列 (包括对角元) 与 Laplacian 差商一致，非对角元为负"""
        from gagliardo.domain import make_configuration, make_params
        from gagliardo.variations import gradient, hessian

        config = make_configuration([0.1, 0.9, 2.2], 3)
        params = make_params(s, p, 3)
        H = hessian(config, params, with_gradient=False).matrix()
        h = 1e-4
        fd = np.column_stack([
            (gradient(config.displace(j, h), params) - gradient(config.displace(j, -h), params)) / (2.0 * h)
            for j in range(3)
        ])
        scale = np.abs(H).max()
        assert_allclose(H, fd, atol=1e-5 * scale)
        assert np.all(H[~np.eye(3, dtype=bool)] < 0.0)

    @pytest.mark.parametrize("T", [2, 3, 5])
    @pytest.mark.parametrize("s,p", [(0.3, 2.0), (0.45, 1.5), (0.2, 3.0)])
    def test_equispaced_spectral(self, T, s, p):
        """测试等距构型: 唯一近零特征值沿平移方向，其余为正"""
        from gagliardo.domain import equispaced, make_params
        from gagliardo.variations import hessian, spectral_check

        report = hessian(equispaced(T), make_params(s, p, T), with_gradient=False)
        H = report.matrix()
        scale = np.abs(H).max()
        assert_allclose(H, H.T, atol=1e-8 * scale)
        assert report.row_sum_residual < 1e-8 * scale
        spectral = spectral_check(report)
        assert spectral.near_zero == 1
        assert spectral.kernel_angle < 1e-4
        assert spectral.positive_on_complement

    @pytest.mark.parametrize("seed", [0, 1, 2, 3])
    def test_random_spectral(self, seed):
        """测试随机构型的 Hessian 也是正权图 Laplacian，二次型恒等式成立"""
        from gagliardo.domain import make_params, random_configuration
        from gagliardo.variations import hessian, quadratic_form, spectral_check

        config = random_configuration(5, 0.1, seed=seed)
        report = hessian(config, make_params(0.45, 1.5, 5), with_gradient=False)
        spectral = spectral_check(report)
        assert spectral.near_zero == 1
        assert spectral.positive_on_complement
        H = report.matrix()
        xi = np.random.default_rng(seed).normal(size=5)
        assert_allclose(quadratic_form(H, xi), float(xi @ H @ xi), rtol=1e-9, atol=1e-12 * np.abs(H).max())

    def test_variation_errors(self):
        """测试区域与尖点检查"""
        from gagliardo.domain import equispaced, make_configuration, make_params
        from gagliardo.errors import CuspPoint, WrongRegime
        from gagliardo.variations import hessian, rigid_laplacian

        with pytest.raises(WrongRegime):
            rigid_laplacian(equispaced(2), 0, make_params(0.5, 2.0, 2))
        cusp = make_configuration([0.5, 0.5], 2)
        with pytest.raises(CuspPoint):
            rigid_laplacian(cusp, 0, make_params(0.3, 2.0, 2))
        with pytest.raises(CuspPoint):
            hessian(cusp, make_params(0.3, 2.0, 2))

    def test_cusp_expansion(self):
        """测试尖点展开系数"""
        from gagliardo.domain import make_params
        from gagliardo.errors import InvalidParameters, WrongRegime
        from gagliardo.variations import cusp_expansion

        coefficient, exponent = cusp_expansion(2, make_params(0.25, 2.0, 2))
        assert_allclose(coefficient, -16.0, rtol=1e-12)
        assert_allclose(exponent, 0.5)
        with pytest.raises(InvalidParameters):
            cusp_expansion(1, make_params(0.25, 2.0, 2))
        with pytest.raises(WrongRegime):
            cusp_expansion(2, make_params(0.25, 1.0, 2))

    @pytest.mark.parametrize("s,p", [(0.25, 2.0), (0.3, 1.5)])
    def test_cusp_scan(self, s, p):
        """测试尖点附近能量差的幂律，系数相对误差 10% 以内"""
        from gagliardo.domain import make_configuration, make_params
        from gagliardo.variations import cusp_scan

        fit = cusp_scan(make_configuration([0.0, 0.0], 2), 0, make_params(s, p, 2))
        assert abs(fit.exponent - fit.predicted_exponent) < 0.05
        assert_allclose(fit.coefficient, fit.predicted_coefficient, rtol=0.1)
        assert fit.coefficient < 0.0

    def test_separation_p1(self):
        """测试 p = 1 单侧分离泛函与单侧差商一致"""
        from gagliardo.domain import equispaced, make_configuration
        from gagliardo.errors import NotOverlapping
        from gagliardo.variations import separation_functionals_p1, separation_slopes_p1

        config = make_configuration([0.0, 0.0], 2)
        f_plus, f_minus = separation_functionals_p1(config, 0, 0.3)
        slope_plus, slope_minus = separation_slopes_p1(config, 0, 0.3)
        assert f_plus + f_minus < 0.0
        assert abs(f_plus - slope_plus) < 0.02 + 0.02 * abs(f_plus)
        assert abs(f_minus - slope_minus) < 0.02 + 0.02 * abs(f_minus)
        with pytest.raises(NotOverlapping):
            separation_functionals_p1(equispaced(2), 0, 0.3)

    @pytest.mark.parametrize("s", [0.2, 0.5, 0.8])
    @pytest.mark.parametrize("seed", range(10))
    def test_separation_p1_negative(self, seed, s):
        """测试随机双重跳点构型上 F+ + F- < 0，s <= 1/2 时与差商一致"""
        from gagliardo.domain import make_configuration, random_configuration
        from gagliardo.variations import separation_functionals_p1, separation_slopes_p1

        pts = list(random_configuration(3, 0.2, seed).points)
        config = make_configuration([pts[0], pts[0], pts[2]], 3)
        f_plus, f_minus = separation_functionals_p1(config, 0, s)
        assert f_plus + f_minus < 0.0
        if s <= 0.5:
            slope_plus, slope_minus = separation_slopes_p1(config, 0, s)
            assert abs(f_plus - slope_plus) < 0.02 + 0.05 * abs(f_plus)
            assert abs(f_minus - slope_minus) < 0.02 + 0.05 * abs(f_minus)

    @pytest.mark.parametrize("T", [2, 3, 5])
    @pytest.mark.parametrize("s,p", [(0.3, 2.0), (0.45, 1.5), (0.2, 3.0)])
    def test_gradient_equispaced_zero_grid(self, T, s, p):
        """测试各周期与参数下等距构型的梯度为零"""
        from gagliardo.domain import equispaced, make_params
        from gagliardo.variations import gradient

        grad = gradient(equispaced(T), make_params(s, p, T))
        assert np.abs(grad).max() < 1e-7

    @pytest.mark.parametrize("T", [2, 3, 5])
    @pytest.mark.parametrize("eps", [0.05, 0.02])
    @pytest.mark.parametrize("s", [0.5, 0.75])
    def test_mollified_gradient_equispaced_zero(self, T, eps, s):
        """测试等距构型是磨光能量的临界点 (sp = 1 与 sp = 1.5)"""
        from gagliardo.domain import equispaced, make_params
        from gagliardo.variations import mollified_gradient

        grad = mollified_gradient(equispaced(T), make_params(s, 2.0, T), eps)
        assert np.abs(grad).max() < 1e-6

    @pytest.mark.parametrize("s,p", [(0.3, 2.0), (0.75, 2.0), (0.5, 3.0)])
    def test_mollified_gradient_matches_finite_difference(self, s, p):
        """测试磨光梯度与磨光能量差商一致，包括 sp > 1"""
        from gagliardo.domain import make_configuration, make_params
        from gagliardo.energy import mollified_energy
        from gagliardo.variations import mollified_gradient

        config = make_configuration([0.0, 1.1, 2.0], 3)
        params = make_params(s, p, 3)
        eps = 0.05
        grad = mollified_gradient(config, params, eps)
        h = 1e-3
        for i in range(3):
            fd = (mollified_energy(config.displace(i, h), params, eps).value
                  - mollified_energy(config.displace(i, -h), params, eps).value) / (2.0 * h)
            assert_allclose(grad[i], fd, rtol=1e-3, atol=1e-4)
        assert abs(grad.sum()) < 1e-6

    def test_mollified_gradient_translation(self):
        """测试整体平移不改变磨光梯度"""
        from gagliardo.domain import make_configuration, make_params
        from gagliardo.variations import mollified_gradient

        config = make_configuration([0.2, 1.3, 2.1], 3)
        params = make_params(0.75, 2.0, 3)
        base = mollified_gradient(config, params, 0.05)
        moved = mollified_gradient(config.translate(0.37), params, 0.05)
        assert_allclose(moved, base, atol=1e-7 * (1.0 + np.abs(base).max()))

    @staticmethod
    def _fd_hessian(grad_fn, config, h):
        T = config.T
        cols = [(grad_fn(config.displace(j, h)) - grad_fn(config.displace(j, -h))) / (2.0 * h)
                for j in range(T)]
        return np.column_stack(cols)

    @pytest.mark.parametrize("s,p", [(0.3, 2.0), (0.5, 2.0), (0.2, 3.0)])
    def test_mollified_hessian_disjoint(self, s, p):
        """测试支集互不相交时的磨光 Hessian: 对称、行和小、与梯度差商一致"""
        from gagliardo.domain import make_configuration, make_params
        from gagliardo.errors import WrongRegime
        from gagliardo.variations import mollified_gradient, mollified_hessian

        config = make_configuration([0.3, 1.2, 2.4], 3)
        params = make_params(s, p, 3)
        eps = 0.05
        report = mollified_hessian(config, params, eps, with_gradient=False)
        H = report.matrix()
        scale = np.abs(H).max()
        assert_allclose(H, H.T, atol=1e-12 * scale)
        assert report.row_sum_residual < 1e-4 * scale
        fd = self._fd_hessian(lambda c: mollified_gradient(c, params, eps), config, 1e-4)
        assert_allclose(H, fd, atol=1e-3 * scale)
        with pytest.raises(WrongRegime):
            mollified_hessian(config, make_params(0.5, 1.0, 3), eps)

    def test_mollified_hessian_general(self):
        """测试支集重叠时走一般公式，结果与梯度差商一致"""
        from gagliardo.domain import make_configuration, make_params
        from gagliardo.variations import mollified_gradient, mollified_hessian

        config = make_configuration([0.3, 0.36, 1.7], 3)
        params = make_params(0.3, 2.0, 3)
        eps = 0.05
        report = mollified_hessian(config, params, eps, with_gradient=False)
        H = report.matrix()
        scale = np.abs(H).max()
        assert report.row_sum_residual < 1e-3 * scale
        fd = self._fd_hessian(lambda c: mollified_gradient(c, params, eps), config, 1e-4)
        assert_allclose(H, fd, atol=2e-3 * scale)


# 测试极限
class TestLimits:
    def test_limit_constants(self):
        """测试极限常数"""
        from gagliardo.limits import limit_constant_s0, limit_constant_s1

        assert_allclose(limit_constant_s0(1, 2.0, 1), 1.0)
        assert_allclose(limit_constant_s0(1, 2.0, 2), 0.5)
        assert_allclose(limit_constant_s0(2, 2.0, 1), math.pi)
        for p in (1.0, 1.5, 2.0, 3.0):
            assert_allclose(limit_constant_s1(1, p), 2.0 / p, rtol=1e-14)
        assert_allclose(limit_constant_s1(2, 2.0), math.pi / 2.0, rtol=1e-14)

    def test_richardson(self):
        """测试 Richardson 外推对多项式精确"""
        from gagliardo.limits import richardson_extrapolate

        steps = [0.2, 0.1, 0.05]
        linear = richardson_extrapolate([1.0 + 2.0 * h for h in steps], steps)
        assert_allclose(linear[0], 1.4)
        assert_allclose(linear[-1], 1.0, atol=1e-12)
        quadratic = richardson_extrapolate([1.0 + h + h * h for h in steps], steps)
        assert_allclose(quadratic[-1], 1.0, atol=1e-12)

    def test_log_slope(self):
        """测试对 ln(1/ε) 的斜率"""
        from gagliardo.limits import log_slope

        eps = [0.1, 0.05, 0.025]
        assert_allclose(log_slope(eps, [3.0 + 2.0 * math.log(1.0 / e) for e in eps]), 2.0, rtol=1e-10)

    def test_sweep_s0_sin(self):
        """测试 s -> 0 极限"""
        from gagliardo.limits import sweep_s0

        table = sweep_s0(sin_u, 2.0, 1, [0.2, 0.1, 0.05, 0.025], "sin")
        assert_allclose(table.target, 1.0, rtol=1e-8)
        assert abs(table.final_extrapolant - table.target) < 2e-3
        assert [r.param for r in table.rows] == [0.2, 0.1, 0.05, 0.025]

    def test_sweep_s1_sin(self):
        """测试 s -> 1 极限"""
        from gagliardo.limits import sweep_s1

        table = sweep_s1(sin_u, 2.0, 1, [0.8, 0.9, 0.95, 0.975], "sin")
        assert_allclose(table.target, 2.0 * math.pi ** 2, rtol=1e-6)
        assert_allclose(table.final_extrapolant, table.target, rtol=1e-3)

    def test_sweep_schedule_validation(self):
        """测试扫描序列检查"""
        from gagliardo.errors import InvalidParameters
        from gagliardo.limits import sweep_s0, sweep_s1

        with pytest.raises(InvalidParameters):
            sweep_s0(sin_u, 2.0, 1, [0.1, 0.2], "sin")
        with pytest.raises(InvalidParameters):
            sweep_s1(sin_u, 2.0, 1, [0.9, 0.995], "sin")
        with pytest.raises(InvalidParameters):
            sweep_s0(sin_u, 2.0, 1, [], "sin")

    def test_critical_scan(self):
        """测试临界对数增长"""
        from gagliardo.domain import equispaced
        from gagliardo.errors import WrongRegime
        from gagliardo.limits import critical_scan

        table = critical_scan(equispaced(2), 2.0, [0.1, 0.05, 0.025, 0.0125])
        assert table.target == 2.0
        assert table.metadata["bounded_below"]
        assert table.metadata["slope"] >= 0.9 * table.target
        raw = [r.raw for r in table.rows]
        assert all(b > a for a, b in zip(raw, raw[1:]))
        with pytest.raises(WrongRegime):
            critical_scan(equispaced(2), 1.0, [0.1])

    @pytest.mark.parametrize("p", [1.5, 2.0, 3.0])
    def test_critical_scan_lower_bound(self, p):
        """测试每行能量不低于显式下界，且下界随间距缩小而升高"""
        from gagliardo.domain import equispaced, make_configuration
        from gagliardo.limits import critical_scan

        schedule = [0.05, 0.025, 0.0125]
        spread = critical_scan(equispaced(2), p, schedule)
        packed = critical_scan(make_configuration([0.0, 0.06], 2), p, schedule)
        for table in (spread, packed):
            assert table.metadata["above_lower_bound"]
            assert all(r.lower is not None and r.raw >= r.lower for r in table.rows)
            assert math.isfinite(table.metadata["compensated_lower"])
        for a, b in zip(spread.rows, packed.rows):
            assert b.lower > a.lower
        # 补偿后的下界随 ε 变化很小
        bound = spread.target
        comp = [r.lower + bound * math.log(r.param) for r in spread.rows]
        assert abs(comp[-1] - comp[-2]) < 0.2 * bound

    def test_critical_scan_detects_collapse(self, monkeypatch, caplog):
        """测试能量随 ε 不增长时两项检查都失败并给出警告"""
        import logging

        from gagliardo import limits
        from gagliardo.domain import equispaced
        from gagliardo.quadrature import EnergyReport

        monkeypatch.setattr(limits, "mollified_energy",
                            lambda config, params, eps: EnergyReport(value=-5.0, abs_err_est=1e-9))
        with caplog.at_level(logging.WARNING, logger="gagliardo-limits"):
            table = limits.critical_scan(equispaced(2), 2.0, [0.1, 0.05, 0.025, 0.0125])
        assert not table.metadata["bounded_below"]
        assert not table.metadata["above_lower_bound"]
        assert any("lower bound" in r.getMessage() for r in caplog.records)


# 测试下降
class TestOptimizer:
    def test_project_min_gap(self):
        """测试间距投影"""
        from gagliardo.optimizer import project_min_gap

        config = project_min_gap([0.0, 0.05, 1.5], 3, 0.2)
        assert config.min_gap >= 0.2 - 1e-12
        assert_allclose(config.gaps().sum(), 3.0)

    def test_verify_equispaced(self):
        """测试等距判定 (平移意义下)"""
        from gagliardo.domain import equispaced, make_configuration
        from gagliardo.optimizer import verify_equispaced

        ok, report = verify_equispaced(equispaced(3).translate(0.4))
        assert ok and report.max_deviation < 1e-12
        ok, _ = verify_equispaced(make_configuration([0.0, 0.9, 2.0], 3))
        assert not ok

    def test_newton_descent_reaches_equispaced(self):
        """测试 Newton 下降收敛到等距构型且能量单调"""
        from gagliardo.domain import make_params, random_configuration
        from gagliardo.optimizer import DescentMethod, DescentOptions, gradient_descent, verify_equispaced

        opts = DescentOptions.from_config(method=DescentMethod.NEWTON, max_iters=60, grad_tol=1e-7)
        trace = gradient_descent(random_configuration(3, 0.3, seed=3), make_params(0.3, 2.0, 3), opts)
        ok, report = verify_equispaced(trace.final, 1e-4)
        assert ok, report
        assert all(b <= a + 1e-6 for a, b in zip(trace.energies, trace.energies[1:]))
        assert trace.termination.value == "converged"

    @pytest.mark.parametrize("seed", [4, 9])
    def test_gradient_descent_default_method(self, seed):
        """测试缺省梯度法: 梯度降到 1e-8 以下，间距与 1 相差 1e-6 以内，能量单调"""
        from gagliardo.domain import make_params, random_configuration
        from gagliardo.optimizer import DescentOptions, gradient_descent, verify_equispaced

        opts = DescentOptions.from_config()
        assert opts.method.value == "gradient"
        trace = gradient_descent(random_configuration(5, 0.1, seed=seed), make_params(0.3, 2.0, 5), opts)
        assert trace.termination.value == "converged"
        assert trace.grad_norms[-1] <= 1e-8
        ok, report = verify_equispaced(trace.final, 1e-6)
        assert ok, report
        assert np.all(np.diff(trace.energies) <= 1e-7)
        assert trace.energies[-1] < trace.energies[0]

    def test_mollified_newton_descent(self):
        """测试磨光模式 (sp = 1.5, ε = 0.02, 下限 4ε) 的 Newton 下降收敛到等距构型"""
        from gagliardo.domain import make_params, random_configuration
        from gagliardo.optimizer import DescentMethod, DescentMode, DescentOptions, gradient_descent, verify_equispaced

        opts = DescentOptions.from_config(mode=DescentMode.MOLLIFIED, eps=0.02, min_gap_floor=0.08,
                                          method=DescentMethod.NEWTON, max_iters=60, grad_tol=1e-6)
        trace = gradient_descent(random_configuration(3, 0.1, seed=0), make_params(0.75, 2.0, 3), opts)
        assert trace.termination.value == "converged"
        ok, report = verify_equispaced(trace.final, 1e-5)
        assert ok, report
        assert np.all(np.diff(trace.energies) <= 1e-9 * abs(trace.energies[0]))

    def test_mollified_gradient_descent(self):
        """测试磨光模式的梯度法"""
        from gagliardo.domain import make_configuration, make_params
        from gagliardo.optimizer import DescentMode, DescentOptions, gradient_descent, verify_equispaced

        opts = DescentOptions.from_config(mode=DescentMode.MOLLIFIED, eps=0.05, min_gap_floor=0.2,
                                          max_iters=300, grad_tol=1e-6)
        trace = gradient_descent(make_configuration([0.0, 0.7], 2), make_params(0.5, 2.0, 2), opts)
        assert trace.termination.value == "converged"
        ok, report = verify_equispaced(trace.final, 1e-5)
        assert ok, report

    def test_stalled_line_search(self, caplog):
        """测试能量始终上升时回溯过半给出警告，用尽后抛出 StalledDescent"""
        import logging
        from unittest.mock import patch

        from gagliardo.domain import make_configuration, make_params
        from gagliardo.errors import StalledDescent
        from gagliardo.optimizer import DescentOptions, gradient_descent
        from gagliardo.quadrature import EnergyReport

        calls = []

        def rising(config, params, tol=None):
            calls.append(config)
            return EnergyReport(value=float(len(calls)), tail_lower=0.0, tail_upper=0.0,
                                abs_err_est=0.0, nodes=1)

        opts = DescentOptions.from_config(max_backtracks=6)
        config = make_configuration([0.0, 0.7], 2)
        with patch("gagliardo.optimizer.energy_config", side_effect=rising):
            with caplog.at_level(logging.WARNING, logger="gagliardo-optimizer"):
                with pytest.raises(StalledDescent):
                    gradient_descent(config, make_params(0.3, 2.0, 2), opts)
        assert len(calls) == 1 + 6
        assert any("backtracks" in r.getMessage() for r in caplog.records)

    def test_minimize_zero(self):
        """测试 F^0_p 下降达到等距值且满足 Jensen 下界"""
        from gagliardo.domain import random_configuration
        from gagliardo.energy import equispaced_energy_zero
        from gagliardo.optimizer import DescentOptions, minimize_zero

        opts = DescentOptions.from_config(max_iters=500, grad_tol=1e-7)
        trace = minimize_zero(random_configuration(3, 0.1, seed=8), 2.0, opts)
        assert trace.jensen_ok
        assert_allclose(trace.energies[-1], equispaced_energy_zero(3, 2.0), atol=1e-6)

    def test_descent_errors(self):
        """测试下降的前置检查"""
        from gagliardo.domain import equispaced, make_configuration, make_params
        from gagliardo.errors import CuspEncountered, InvalidParameters, WrongRegime
        from gagliardo.optimizer import DescentMode, DescentOptions, gradient_descent

        with pytest.raises(WrongRegime):
            gradient_descent(equispaced(2), make_params(0.5, 2.0, 2))
        with pytest.raises(CuspEncountered):
            gradient_descent(make_configuration([0.5, 0.5], 2), make_params(0.3, 2.0, 2))
        opts = DescentOptions.from_config(mode=DescentMode.MOLLIFIED, eps=0.1, min_gap_floor=0.2)
        with pytest.raises(InvalidParameters):
            gradient_descent(equispaced(2), make_params(0.5, 2.0, 2), opts)

    def test_multi_start_order(self):
        """测试多起点结果按种子顺序返回"""
        from gagliardo.domain import make_params, random_configuration
        from gagliardo.optimizer import DescentMethod, DescentOptions, multi_start

        opts = DescentOptions.from_config(method=DescentMethod.NEWTON, max_iters=5)
        traces = multi_start(2, make_params(0.3, 2.0, 2), [1, 2], min_gap=0.3, opts=opts)
        assert len(traces) == 2
        assert traces[0].iterates[0] == list(random_configuration(2, 0.3, 1).points)
        assert traces[1].iterates[0] == list(random_configuration(2, 0.3, 2).points)


# 测试输出
class TestOutput:
    def test_sweep_csv(self):
        """测试扫描表 CSV 列顺序与空外推值"""
        from gagliardo.limits import SweepRow, SweepTable
        from gagliardo.output import sweep_csv

        table = SweepTable(kind="sweep-s0", target=0.5,
                           rows=[SweepRow(param=0.1, raw=1.0, scaled=0.1)])
        assert sweep_csv(table) == "param,raw,scaled,extrapolant,target\n0.1,1.0,0.1,,0.5\n"

    def test_dumps_numpy_scalars(self):
        """测试 numpy 标量与数组写成原生 JSON 值"""
        from gagliardo.output import dumps

        text = dumps({"ok": np.bool_(True), "x": np.float64(0.5), "v": np.arange(2)})
        assert json.loads(text) == {"ok": True, "x": 0.5, "v": [0, 1]}

    def test_emit_table_deterministic(self, tmp_path):
        """测试同一输入两次写出逐字节相同"""
        from gagliardo.limits import SweepRow, SweepTable
        from gagliardo.output import emit_table

        table = SweepTable(kind="sweep-s1", target=1.0 / 3.0,
                           rows=[SweepRow(param=0.9, raw=2.0 / 3.0, scaled=0.1, extrapolant=0.3)])
        for fmt in ("csv", "json"):
            a, b = tmp_path / f"a.{fmt}", tmp_path / f"b.{fmt}"
            emit_table(table, fmt, a)
            emit_table(table, fmt, b)
            assert a.read_bytes() == b.read_bytes()
            assert b"\r\n" not in a.read_bytes()
        with pytest.raises(ValueError):
            emit_table(table, "xml", tmp_path / "c")

    def test_trace_jsonl(self):
        """测试下降轨迹每个迭代一行"""
        from gagliardo.domain import equispaced
        from gagliardo.optimizer import DescentTrace
        from gagliardo.output import trace_csv, trace_jsonl

        trace = DescentTrace(T=2)
        trace.record(equispaced(2), 0.5, np.array([0.1, -0.1]))
        trace.record(equispaced(2), 0.25, np.array([0.0, 0.0]))
        lines = trace_jsonl(trace).splitlines()
        assert [json.loads(line)["iter"] for line in lines] == [0, 1]
        assert json.loads(lines[0])["grad_inf"] == 0.1
        assert trace_csv(trace).splitlines()[0] == "iter,energy,grad_inf"


# 测试命令行
class TestCLI:
    @staticmethod
    def _error(capsys):
        lines = [line for line in capsys.readouterr().err.splitlines() if line.strip()]
        return json.loads(lines[-1])

    def test_energy0(self, capsys):
        """测试 energy0 命令"""
        from gagliardo.cli import main

        assert main(["energy0", "--T", "2", "--p", "2", "--equispaced"]) == 0
        out = json.loads(capsys.readouterr().out)
        assert_allclose(out["value"], 2.0 / 3.0, rtol=1e-12)

    def test_energy_csv(self, capsys):
        """测试能量 CSV 单行输出"""
        from gagliardo.cli import main

        assert main(["energy", "--T", "1", "--s", "0.25", "--p", "2", "--format", "csv"]) == 0
        lines = capsys.readouterr().out.splitlines()
        assert len(lines) == 1
        assert len(lines[0].split(",")) == 4

    def test_optimize_trace(self, capsys, tmp_path):
        """测试 optimize 写出 JSONL 轨迹并给出摘要"""
        from gagliardo.cli import main

        trace = tmp_path / "trace.jsonl"
        argv = ["optimize", "--T", "2", "--s", "0.3", "--p", "2", "--random", "--seed", "1",
                "--min-gap", "0.3", "--method", "newton", "--out", str(trace)]
        assert main(argv) == 0
        summary = json.loads(capsys.readouterr().out)
        assert summary["equispaced"]
        lines = trace.read_text(encoding="utf-8").splitlines()
        assert len(lines) == summary["iterations"] + 1

    def test_estimates(self, capsys):
        """测试截断能量加尾项界包含完整能量"""
        from gagliardo.cli import main

        argv = ["estimates", "--T", "1", "--s", "0.3", "--p", "2", "--function", "sin", "--schedule", "5"]
        assert main(argv) == 0
        out = json.loads(capsys.readouterr().out)
        assert_allclose(out["F0"], 1.0, rtol=1e-9)
        assert all(row["contained"] for row in out["rows"])

    def test_estimates_configuration_default_radii(self, capsys):
        """测试构型的 estimates 输出: 缺省 R = 3T, 5T, 10T 且 JSON 可解析"""
        from gagliardo.cli import main

        argv = ["estimates", "--T", "2", "--s", "0.3", "--p", "2", "--points", "0.1,1.3"]
        assert main(argv) == 0
        out = json.loads(capsys.readouterr().out)
        assert [row["R"] for row in out["rows"]] == [6.0, 10.0, 20.0]
        for row in out["rows"]:
            assert isinstance(row["contained"], bool)
            assert row["contained"]
            assert row["tail_lower"] <= row["tail_upper"]

    def test_constants_two_dimensions(self, capsys):
        """测试 constants 命令按 --d 输出二维常数与尾项系数"""
        from gagliardo.cli import main

        argv = ["constants", "--d", "2", "--p", "2", "--T", "2", "--s", "0.3"]
        assert main(argv) == 0
        out = json.loads(capsys.readouterr().out)
        assert out["d"] == 2
        assert_allclose(out["sphere_area"], 2.0 * math.pi, rtol=1e-14)
        assert_allclose(out["limit_s0"], math.pi / 4.0, rtol=1e-14)
        assert_allclose(out["limit_s1"], math.pi / 2.0, rtol=1e-14)
        root = math.sqrt(2.0)
        assert_allclose([t["R"] for t in out["tails"]], [6.0 * root, 10.0 * root, 20.0 * root])
        for t in out["tails"]:
            assert 0.0 < t["lower_per_F0"] < t["upper_per_F0"]
            assert t["c2"] < 1.0 < t["c1"]

    def test_constants_without_s(self, capsys):
        """测试不给 --s 时只输出极限常数"""
        from gagliardo.cli import main

        assert main(["constants", "--d", "3", "--p", "1"]) == 0
        out = json.loads(capsys.readouterr().out)
        assert "tails" not in out
        # K_{3,1} = 2π Γ(1)/Γ(2) = 2π
        assert_allclose(out["limit_s1"], 2.0 * math.pi, rtol=1e-14)
        assert_allclose(out["limit_s0"], 4.0 * math.pi, rtol=1e-14)

    def test_spec_file_override(self, capsys, tmp_path):
        """测试命令行参数覆盖 JSON 规格文件"""
        from gagliardo.cli import main

        spec = tmp_path / "spec.json"
        spec.write_text(json.dumps({"T": 2, "p": 2, "equispaced": True}), encoding="utf-8")
        assert main(["energy0", "--spec", str(spec), "--p", "3"]) == 0
        assert_allclose(json.loads(capsys.readouterr().out)["value"], 0.4, rtol=1e-12)

    def test_conflicting_flags(self, capsys):
        """测试互斥参数返回 2"""
        from gagliardo.cli import main

        code = main(["energy", "--T", "2", "--s", "0.3", "--equispaced", "--points", "0,1"])
        assert code == 2
        assert self._error(capsys)["kind"] == "InvalidConfiguration"

    def test_divergent_energy(self, capsys):
        """测试数值失败返回 3"""
        from gagliardo.cli import main

        assert main(["energy", "--T", "1", "--s", "0.5", "--p", "2"]) == 3
        assert self._error(capsys)["kind"] == "DivergentEnergy"

    def test_io_error(self, capsys, tmp_path):
        """测试输出路径不可写返回 4"""
        from gagliardo.cli import main

        out = tmp_path / "missing" / "x.json"
        assert main(["energy0", "--T", "2", "--p", "2", "--out", str(out)]) == 4
        assert self._error(capsys)["kind"] == "IOError"

    def test_unknown_command(self):
        """测试未知命令"""
        from gagliardo.cli import main

        with pytest.raises(SystemExit) as exc:
            main(["bogus"])
        assert exc.value.code == 2

    def test_config_command(self, capsys):
        """测试显示配置"""
        from gagliardo.cli import main

        assert main(["config"]) == 0
        assert "quadrature:" in capsys.readouterr().out
