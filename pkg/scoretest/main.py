from fastapi import FastAPI, Request
from fastapi.responses import JSONResponse

from scoretest.api import check, exponent
from scoretest.errors import ScoreTestError
from scoretest.logger import api_logger, configure_logging

app = FastAPI(title="Score Test Service")

configure_logging()


@app.exception_handler(ScoreTestError)
def score_test_error(request: Request, exc: ScoreTestError):
    api_logger.warning(f"[{request.url.path}] {exc.kind}: {exc}")
    return JSONResponse(status_code=400, content={"error": exc.kind, "detail": str(exc)})


app.include_router(check.router, prefix="/check")
app.include_router(exponent.router, prefix="/exponent")
