from .scenario import REQUIRED_SECTIONS, ScenarioDocument, ScenarioError, parse_scenario
