import json
import sys

sys.stdout.write('14 {"ready":true}\n')
sys.stdout.flush()
for line in sys.stdin:
    while True:
        pass
