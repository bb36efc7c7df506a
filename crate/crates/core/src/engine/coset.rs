// coset-route cases (split): unramified special, supercuspidal, ramified principal series
