"""Print the headline security numbers: thresholds, win probabilities, settlement times."""
from ssle_security import security_threshold, win_probability
from ssle_security.persistence import persistence_parameter, reduction_ratio


def main() -> None:
    print("grinding security thresholds")
    for kind in ("ssle", "ple"):
        print(f"  {kind:5s} {security_threshold(kind):.4f}")

    print("\nprivate-attack win probability, alpha=0.33, n=300")
    for kind in ("ssle", "ple"):
        print(f"  {kind:5s} {win_probability(kind, 0.33, 300).prob:.3e}")

    print("\nsettlement time n0 and SSLE reduction, private game, eps=1e-12")
    for alpha in (0.1, 0.25, 0.33, 0.49):
        s = persistence_parameter("ssle", alpha, 1e-12)
        p = persistence_parameter("ple", alpha, 1e-12)
        print(f"  alpha={alpha:<5} ssle={s.n0:>7} ple={p.n0:>7} reduction={reduction_ratio(alpha, 1e-12):5.1f}%  ({p.method})")

    print("\nsettlement-time proxy from the grinding game, eps=1e-9")
    for alpha in (0.1, 0.2):
        s = persistence_parameter("ssle", alpha, 1e-9, "grinding")
        p = persistence_parameter("ple", alpha, 1e-9, "grinding")
        print(f"  alpha={alpha:<5} ssle={s.n0:>7} ple={p.n0:>7} reduction={reduction_ratio(alpha, 1e-9, 'grinding'):5.1f}%")


if __name__ == "__main__":
    main()
