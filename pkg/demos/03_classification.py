"""Train the full classification pipeline and compare the classifier zoo.

Shows the three-stage procedure (frequencies, support recovery, constrained
risk refit) and evaluates bayes / oes / pi / ermlr on a held-out test set.
"""

import numpy as np

import sparsehawkes as sh


def main():
    mix = sh.make_scenario(sh.ScenarioSpec(name="scenario1", M=5, seed=0))
    train = sh.sample_dataset(mix, 600, 101)
    test = sh.sample_dataset(mix, 1500, 202)

    result = sh.train_ermlr(train, kernel=mix.kernel, K=3, true_params=mix.params)
    print("three-stage training")
    print(f"  class frequencies : {np.round(result.p_hat, 3)}")
    print(f"  support sizes     : {[len(f.support) for f in result.lasso.classes]} "
          f"(true {int((mix.params[0].A != 0).sum())})")
    print(f"  refit risk        : {result.initial_risk:.4f} -> {result.final_risk:.4f}")
    print(f"  stage wall times  : lasso {result.lasso_seconds:.2f}s, erm {result.erm_seconds:.2f}s")

    bayes = sh.ClassifierModel(p_hat=mix.class_weights, params=mix.params,
                               kernel=mix.kernel, variant="bayes")
    feat = sh.prepare_features(test, mix.kernel)
    print("\ntest error rates (1500 held-out paths)")
    for tag, model in (("bayes", bayes), ("oes", result.oes), ("pi", result.pi),
                       ("ermlr", result.ermlr)):
        print(f"  {tag:6s}: {sh.error_rate(model, feat):.4f}")

    # posterior scores for a single path under the trained model
    sample = test[0]
    f = sh.score(result.ermlr, sample.path)
    print(f"\none test path: true label {sample.label}, "
          f"scores {np.round(f, 3)}, predicted {int(np.argmax(f)) + 1}")


if __name__ == "__main__":
    main()
