"""
HTTP entry point of the traffic forecasting services.
Mounts the series, models and reports routers and maps domain errors to JSON
responses.
"""

import os
from fastapi import FastAPI, Request
from fastapi.middleware.cors import CORSMiddleware
from fastapi.responses import JSONResponse

from app import config
from app.errors import ForecastError

# Import routers
from app.services.ingest.router import router as series_router
from app.services.forecast.router import router as models_router
from app.services.evaluation.router import router as reports_router

config.configure_logging()

# Create app
app = FastAPI(title="Traffic Volume Forecasting API", description="Hourly volume and AADT forecasts")

# Configure CORS
app.add_middleware(
    CORSMiddleware,
    allow_origins=["*"],
    allow_credentials=True,
    allow_methods=["*"],
    allow_headers=["*"],
)

# Include routers
app.include_router(series_router, prefix="/api/series", tags=["series"])
app.include_router(models_router, prefix="/api/models", tags=["models"])
app.include_router(reports_router, prefix="/api/reports", tags=["reports"])


@app.exception_handler(ForecastError)
async def forecast_error_handler(request: Request, exc: ForecastError):
    """Domain errors answer with the error's status and machine code."""
    content = {"detail": exc.message, "error": exc.code}
    if exc.line is not None:
        content["line"] = exc.line
    return JSONResponse(status_code=exc.status_code, content=content)


@app.exception_handler(FileNotFoundError)
async def file_not_found_handler(request: Request, exc: FileNotFoundError):
    return JSONResponse(status_code=404, content={"detail": "CSV file not found", "error": "file_not_found"})


# Add health check endpoint
@app.get("/api/health")
async def health_check():
    """Health check endpoint."""
    return {"status": "ok"}


# Startup event
@app.on_event("startup")
async def startup_event():
    """
    Startup event to create the data directories.
    """
    for directory in (config.DATA_DIR, config.MODELS_DIR, config.REPORTS_DIR):
        os.makedirs(directory, exist_ok=True)


if __name__ == "__main__":
    import uvicorn
    uvicorn.run("app.main:app", host="0.0.0.0", port=8000, reload=True)
