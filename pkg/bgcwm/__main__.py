from bgcwm.main import run

run()
