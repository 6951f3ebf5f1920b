# Erasure SFC - Flask application
"""Flask app: JSON APIs over the rate, optimizer and audit services."""
import json
import logging

from flask import Flask, request

import logger as app_logger
from config import DEBUG, SECRET_KEY
from errors import SfcError, UsageError
from services.boot_service import BootParams, boot_assign
from services.privacy_audit_service import audit_disjoint_gf2
from services.rate_service import optimize_boot_params, rate_report, rate_table
from utils import format_params, parse_branching, parse_grid, parse_param_sets

app_logger  # ensure logging is configured

app = Flask(__name__)
app.config["SECRET_KEY"] = SECRET_KEY
app.config["DEBUG"] = DEBUG

logger = logging.getLogger(__name__)


def _json(payload, status: int = 200):
    return app.response_class(response=json.dumps(payload), status=status, mimetype="application/json")


def _arg_int(name: str, default: int) -> int:
    raw = request.args.get(name)
    if raw is None or raw == "":
        return default
    try:
        return int(raw)
    except ValueError:
        raise UsageError(f"{name} must be an integer, got {raw!r}") from None


def _arg_p() -> float:
    raw = request.args.get("p", "0.5")
    try:
        return float(raw)
    except ValueError:
        raise UsageError(f"p must be a number, got {raw!r}") from None


@app.errorhandler(SfcError)
def _bad_request(e):
    return _json({"error": str(e)}, 400)


@app.errorhandler(Exception)
def _server_error(e):
    code = getattr(e, "code", None)
    if isinstance(code, int):
        return _json({"error": str(e)}, code)
    logger.exception("Request failed: %s", e)
    return _json({"error": "internal error"}, 500)


# ----- JSON APIs -----


@app.route("/api/status")
def api_status():
    """Health/status check; returns 200 OK."""
    return _json({"status": "ok"})


@app.route("/api/rates")
def api_rates():
    """Rate summary at one p: SWOT, its source bound, and BOOT for ?params=2,3 when given."""
    params = request.args.get("params", "").strip()
    branching = parse_branching(params) if params else None
    report = rate_report(_arg_p(), _arg_int("m", 2), branching)
    return _json(report.to_dict())


@app.route("/api/rates.csv")
def api_rates_csv():
    grid = parse_grid(request.args.get("p_grid", "0:1:0.05"))
    params = request.args.get("params", "").strip()
    frame = rate_table(grid, _arg_int("m", 10), parse_param_sets(params) if params else None, _arg_int("max_u", 4))
    return frame.to_csv(index=False), 200, {"Content-Type": "text/csv",
                                            "Content-Disposition": "attachment; filename=rates.csv"}


@app.route("/api/optimize")
def api_optimize():
    m = _arg_int("m", 10)
    best = optimize_boot_params(_arg_p(), m, _arg_int("max_u", 4))
    return _json({"m": m, "params": format_params(best.branching), "rate": best.rate,
                  "rate_exact": str(best.rate_exact)})


@app.route("/api/audit/disjoint")
def api_audit_disjoint():
    """GF(2) disjoint audit of a BOOT tree for Bob's selection b."""
    m = _arg_int("m", 6)
    params = request.args.get("params", "").strip()
    boot = BootParams(parse_branching(params) if params else (m,), m)
    b = _arg_int("b", 1)
    out = audit_disjoint_gf2(boot, b).to_dict()
    out["assignment"] = [list(d) for d in boot_assign(boot).digits]
    return _json(out)


if __name__ == "__main__":
    app.run(debug=DEBUG, use_reloader=False)
