import json
import math

import numpy as np
import pytest

from ballspace.expr import ExpressionError, compile_expression, compile_univariate, parse_call
from ballspace.report import VerificationReport, plot_csv, text_table


def test_expression_values():
    f = compile_expression("2*x^2 - abs(x) + chi(0, 1, x) + (x > 3)", 1)
    x = np.array([-1.0, 0.5, 4.0])
    np.testing.assert_allclose(f(x), 2 * x**2 - np.abs(x) + [0, 1, 0] + [0, 0, 1])
    g = compile_expression("r", 2)
    assert g(np.array([3.0]), np.array([4.0]))[0] == pytest.approx(5.0)
    assert compile_univariate("t**2 * log(e + t)")(np.array([1.0]))[0] == pytest.approx(math.log(math.e + 1))


@pytest.mark.parametrize("bad", ["x +", "__import__('os')", "y", "foo(x)", "x.real"])
def test_expression_rejects(bad):
    with pytest.raises(ExpressionError):
        compile_expression(bad, 1)


def test_parse_call():
    assert parse_call("Herz(0.2, 2, inf, homogeneous=false)") == ("Herz", [0.2, 2, math.inf], {"homogeneous": "false"})
    assert parse_call("Convexified(L3, 2)") == ("Convexified", ["L3", 2], {})
    assert parse_call("A(-1, 'x', [1, 2])") == ("A", [-1, "x", [1, 2]], {})
    with pytest.raises(ExpressionError):
        parse_call("1 + 2")


def test_report_json_safe():
    r = VerificationReport("demo")
    r.add(probe=0, ratio=np.float64(1.5), flag=np.bool_(True))
    r.aggregates.update(big=math.inf, bad=math.nan, arr=np.arange(2))
    r.require(False, "broken")
    d = json.loads(r.to_json())
    assert d["aggregates"] == {"arr": [0, 1], "bad": "nan", "big": "inf"}
    assert d["records"] == [{"flag": True, "probe": 0, "ratio": 1.5}]
    assert not d["passed"] and d["notes"] == ["broken"]
    info = VerificationReport("info", asserted=False)
    info.require(False)
    assert info.ok and "INFO" in text_table([info])


def test_plot_csv_rows():
    r = VerificationReport("demo", config={"name": "x"})
    r.add(probe=1, ratio=2.0)
    lines = plot_csv([r]).splitlines()
    assert lines[0] == "check,probe_id,x,value"
    assert lines[1].startswith("demo,1,")
