import pytest

from app import app


@pytest.fixture
def client():
    app.config["TESTING"] = True
    with app.test_client() as c:
        yield c


def test_status(client):
    resp = client.get("/api/status")
    assert resp.status_code == 200
    assert resp.get_json() == {"status": "ok"}


def test_rates_summary(client):
    data = client.get("/api/rates?p=0.5&m=2&params=2").get_json()
    assert data["swot_rate"] == pytest.approx(0.5)
    assert data["boot_rate"] == pytest.approx(0.5)
    assert data["swot_capacity_upper"] == pytest.approx(0.5, abs=1e-9)


def test_rates_csv(client):
    resp = client.get("/api/rates.csv?p_grid=0:1:0.5&m=10&params=10;2,5")
    assert resp.status_code == 200
    assert resp.headers["Content-Type"].startswith("text/csv")
    lines = resp.get_data(as_text=True).strip().splitlines()
    assert lines[0] == "p,params,rate"
    assert len(lines) == 1 + 6


def test_optimize(client):
    data = client.get("/api/optimize?p=0.5&m=10&max_u=4").get_json()
    assert data["params"] == "2x2x3"
    assert data["rate_exact"] == "1/8"


def test_audit_disjoint(client):
    data = client.get("/api/audit/disjoint?m=6&params=2,3&b=3").get_json()
    assert data["passed"] is True
    assert data["recoverable_units"] == [3]
    assert [1, 4, 6] in data["leak_witnesses"]
    assert data["assignment"][2] == [1, 3]


@pytest.mark.parametrize("url", [
    "/api/rates?p=abc",
    "/api/rates?p=0.5&m=1",
    "/api/rates.csv?p_grid=1:0:0.1",
    "/api/optimize?m=ten",
    "/api/audit/disjoint?m=6&params=2,2",
    "/api/audit/disjoint?m=4&b=9",
])
def test_bad_input_is_400(client, url):
    resp = client.get(url)
    assert resp.status_code == 400
    assert "error" in resp.get_json()


def test_unknown_route_is_404(client):
    assert client.get("/api/nothing").status_code == 404
