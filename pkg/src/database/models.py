from sqlalchemy import Column, Integer, String, DateTime, ForeignKey, Float, Text
from sqlalchemy.orm import declarative_base
from sqlalchemy.orm import relationship
from datetime import datetime, timezone

Base = declarative_base()


def _utcnow():
    return datetime.now(timezone.utc)


class RunRecord(Base):
    __tablename__ = 'runs'

    id = Column(Integer, primary_key=True)
    subcommand = Column(String(20), nullable=False)
    scenario_name = Column(String(200))
    scenario_digest = Column(String(64), nullable=False)  # SHA-256 of the scenario text
    seed = Column(String(20))  # u64 does not fit a signed SQL integer
    outputs = Column(Text)  # newline-separated output paths
    summary = Column(Text)
    created_at = Column(DateTime, default=_utcnow)
    readings = relationship("ClockReadingRecord", back_populates="run", cascade="all, delete-orphan")


class ClockReadingRecord(Base):
    __tablename__ = 'clock_readings'

    id = Column(Integer, primary_key=True)
    run_id = Column(Integer, ForeignKey('runs.id'), nullable=False)
    ion_id = Column(String(50))
    label = Column(String(20))
    trap = Column(String(20))
    epoch_s = Column(Float)
    estimate = Column(Float)
    sigma = Column(Float)
    run = relationship("RunRecord", back_populates="readings")
