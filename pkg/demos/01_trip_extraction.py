"""Walk through trip extraction on a hand-built GPS fix stream.

One simulated morning: a commute, a parked stop at the office, a short
errand, then a signal gap. Shows where the stream is cut, why, and what the
corpus filters would keep.
"""

from tripcast import GeoPoint, GpsFix, extract_trips, filter_corpus, merge_close_trips
from tripcast.geo import offset_point

HOME = GeoPoint(57.700, 11.970)


def drive(fixes, t0, start_east, end_east, n, speed_kmh=35.0):
    for i in range(n):
        frac = i / max(1, n - 1)
        east = start_east + frac * (end_east - start_east)
        fixes.append(GpsFix("demo", t0 + 60.0 * i, offset_point(HOME, east, 0.0),
                            speed_kmh))
    return t0 + 60.0 * (n - 1)


def park(fixes, t0, east, minutes):
    pos = offset_point(HOME, east, 0.0)
    for i in range(minutes):
        fixes.append(GpsFix("demo", t0 + 60.0 * (i + 1), pos, 0.0))
    return t0 + 60.0 * minutes


def main():
    fixes = []
    t = drive(fixes, 0.0, 0.0, 6000.0, 12)            # home -> office
    t = park(fixes, t, 6000.0, 14)                    # parked 14 min: splits
    t = drive(fixes, t + 60.0, 6000.0, 7500.0, 5)     # office -> lunch
    # 40-minute signal gap, then a drive back
    t = drive(fixes, t + 2400.0, 7500.0, 0.0, 14)

    print(f"{len(fixes)} raw fixes")
    trips = extract_trips(fixes)
    print(f"extracted {len(trips)} trips:")
    for i, trip in enumerate(trips):
        print(f"  trip {i}: t=[{trip.t_start:7.0f}, {trip.t_end:7.0f}]  "
              f"dist {trip.distance_m:7.1f} m  dur {trip.duration_s:5.0f} s")
    print()
    print("cut 1: speed < 0.1 km/h sustained 10 min -> trip ends at the stop's")
    print("       first slow fix, the next departs from its last slow fix")
    print("cut 2: inter-fix gap beyond 300 s -> new trip after the gap")
    print()

    merged = merge_close_trips(trips)
    print(f"merge pass (< 10 s apart): {len(trips)} -> {len(merged)} trips")

    kept = filter_corpus(merged)
    print(f"corpus filters: kept {len(kept)} of {len(merged)} "
          "(short histories are dropped whole — a single morning never "
          "survives the 30-day span rule)")


if __name__ == "__main__":
    main()
