#include "zeroshot/vocabulary.hpp"

#include <algorithm>
#include <set>
#include <utility>

#include "zeroshot/error.hpp"
#include "zeroshot/text_io.hpp"

namespace zeroshot {

namespace {

// Opening lines of the scikit-learn (and xgboost) reference documentation for
// each primitive.
const std::pair<const char*, const char*> kEstimators[] = {
    {"random_forest",
     "A random forest classifier. A random forest is a meta estimator that fits a number of "
     "decision tree classifiers on various sub-samples of the dataset and uses averaging to "
     "improve the predictive accuracy and control over-fitting."},
    {"bagging",
     "A Bagging classifier. A Bagging classifier is an ensemble meta-estimator that fits base "
     "classifiers each on random subsets of the original dataset and then aggregates their "
     "individual predictions (either by voting or by averaging) to form a final prediction."},
    {"decision_tree",
     "A decision tree classifier. Decision Trees are a non-parametric supervised learning "
     "method used for classification. The goal is to create a model that predicts the value of "
     "a target variable by learning simple decision rules inferred from the data features."},
    {"liblinear_svc",
     "Linear Support Vector Classification. Similar to SVC with parameter kernel linear, but "
     "implemented in terms of liblinear rather than libsvm, so it has more flexibility in the "
     "choice of penalties and loss functions and should scale better to large numbers of "
     "samples."},
    {"gradient_boosting",
     "Gradient Boosting for classification. This algorithm builds an additive model in a "
     "forward stage-wise fashion; it allows for the optimization of arbitrary differentiable "
     "loss functions. In each stage regression trees are fit on the negative gradient of the "
     "loss function."},
    {"libsvm_svc",
     "C-Support Vector Classification. The implementation is based on libsvm. The fit time "
     "scales at least quadratically with the number of samples. The multiclass support is "
     "handled according to a one-vs-one scheme. Kernels include rbf, poly and sigmoid."},
    {"extra_trees",
     "An extra-trees classifier. This class implements a meta estimator that fits a number of "
     "randomized decision trees (extra-trees) on various sub-samples of the dataset and uses "
     "averaging to improve the predictive accuracy and control over-fitting."},
    {"bernoulli_nb",
     "Naive Bayes classifier for multivariate Bernoulli models. Like MultinomialNB, this "
     "classifier is suitable for discrete data. The difference is that while MultinomialNB "
     "works with occurrence counts, BernoulliNB is designed for binary or boolean features."},
    {"adaboost",
     "An AdaBoost classifier. An AdaBoost classifier is a meta-estimator that begins by "
     "fitting a classifier on the original dataset and then fits additional copies of the "
     "classifier on the same dataset but where the weights of incorrectly classified instances "
     "are adjusted such that subsequent classifiers focus more on difficult cases."},
    {"k_nearest_neighbors",
     "Classifier implementing the k-nearest neighbors vote. Classification is computed from a "
     "simple majority vote of the nearest neighbors of each point: a query point is assigned "
     "the data class which has the most representatives within the nearest neighbors."},
    {"multinomial_nb",
     "Naive Bayes classifier for multinomial models. The multinomial Naive Bayes classifier is "
     "suitable for classification with discrete features (e.g., word counts for text "
     "classification). The multinomial distribution normally requires integer feature counts."},
    {"passive_aggressive",
     "Passive Aggressive Classifier. Passive aggressive algorithms are a family of algorithms "
     "for large-scale learning. They are similar to the Perceptron in that they do not require "
     "a learning rate, however contrary to the Perceptron they include a regularization "
     "parameter C."},
    {"gaussian_nb",
     "Gaussian Naive Bayes. Can perform online updates to model parameters via partial fit. "
     "The likelihood of the features is assumed to be Gaussian, with mean and variance "
     "estimated per class using maximum likelihood."},
    {"logisticregression",
     "Logistic Regression (aka logit, MaxEnt) classifier. In the multiclass case, the training "
     "algorithm uses the one-vs-rest scheme or the cross-entropy loss. This class implements "
     "regularized logistic regression using the liblinear, newton-cg, sag, saga and lbfgs "
     "solvers."},
    {"sgd",
     "Linear classifiers (SVM, logistic regression, etc.) with SGD training. This estimator "
     "implements regularized linear models with stochastic gradient descent learning: the "
     "gradient of the loss is estimated each sample at a time and the model is updated along "
     "the way with a decreasing strength schedule."},
    {"qda",
     "Quadratic Discriminant Analysis. A classifier with a quadratic decision boundary, "
     "generated by fitting class conditional densities to the data and using Bayes' rule. The "
     "model fits a Gaussian density to each class."},
    {"lda",
     "Linear Discriminant Analysis. A classifier with a linear decision boundary, generated by "
     "fitting class conditional densities to the data and using Bayes' rule. The model fits a "
     "Gaussian density to each class, assuming that all classes share the same covariance "
     "matrix."},
    {"xgbclassifier",
     "XGBoost classifier. XGBoost is an optimized distributed gradient boosting library "
     "designed to be highly efficient, flexible and portable. It implements machine learning "
     "algorithms under the gradient boosting framework, providing parallel tree boosting."},
};

const std::pair<const char*, const char*> kFeatureProcessors[] = {
    {"standardscaler",
     "Standardize features by removing the mean and scaling to unit variance. The standard "
     "score of a sample x is calculated as z = (x - u) / s where u is the mean of the training "
     "samples and s is the standard deviation."},
    {"robustscaler",
     "Scale features using statistics that are robust to outliers. This Scaler removes the "
     "median and scales the data according to the quantile range, by default the interquartile "
     "range between the 1st quartile and the 3rd quartile."},
    {"minmaxscaler",
     "Transform features by scaling each feature to a given range. This estimator scales and "
     "translates each feature individually such that it is in the given range on the training "
     "set, e.g. between zero and one."},
    {"normalizer",
     "Normalize samples individually to unit norm. Each sample (each row of the data matrix) "
     "with at least one non zero component is rescaled independently of other samples so that "
     "its norm (l1, l2 or inf) equals one."},
    {"maxabsscaler",
     "Scale each feature by its maximum absolute value. This estimator scales and translates "
     "each feature individually such that the maximal absolute value of each feature in the "
     "training set will be 1.0. It does not shift or center the data, and thus does not "
     "destroy any sparsity."},
    {"pca",
     "Principal component analysis (PCA). Linear dimensionality reduction using Singular Value "
     "Decomposition of the data to project it to a lower dimensional space. The input data is "
     "centered but not scaled for each feature before applying the SVD."},
    {"fastica",
     "FastICA: a fast algorithm for Independent Component Analysis. Separates a multivariate "
     "signal into additive subcomponents that are maximally independent, estimating an "
     "unmixing matrix."},
    {"polynomial",
     "Generate polynomial and interaction features. Generate a new feature matrix consisting "
     "of all polynomial combinations of the features with degree less than or equal to the "
     "specified degree."},
    {"rbfsampler",
     "Approximate a RBF kernel feature map using random Fourier features. It implements a "
     "variant of Random Kitchen Sinks, a Monte Carlo approximation to the feature map of a "
     "radial basis function kernel."},
    {"selectfwe",
     "Filter: Select the p-values corresponding to Family-wise error rate. Features are scored "
     "with a univariate statistical test and kept when their p-value is below alpha divided by "
     "the number of features."},
    {"variancethreshold",
     "Feature selector that removes all low-variance features. This feature selection "
     "algorithm looks only at the features, not the desired outputs, and can thus be used for "
     "unsupervised learning."},
    {"selectfrommodel",
     "Meta-transformer for selecting features based on importance weights. The estimator "
     "should have a feature importances or coefficients attribute after fitting; features "
     "whose importance is below a threshold are discarded."},
    {"select_percentile_classification",
     "Select features according to a percentile of the highest scores. Features are ranked by "
     "a univariate scoring function for classification such as the ANOVA F-value or "
     "chi-squared statistic, and the top percentile is retained."},
    {"rfe",
     "Feature ranking with recursive feature elimination. Given an external estimator that "
     "assigns weights to features, recursive feature elimination selects features by "
     "recursively considering smaller and smaller sets of features, pruning the least "
     "important ones."},
};

std::optional<std::size_t> find_in(const std::vector<std::string>& names, std::string_view name) {
  auto it = std::find(names.begin(), names.end(), name);
  if (it == names.end()) return std::nullopt;
  return static_cast<std::size_t>(it - names.begin());
}

}  // namespace

PrimitiveVocabulary PrimitiveVocabulary::standard() {
  PrimitiveVocabulary v;
  for (const auto& [name, doc] : kEstimators) {
    v.estimators.emplace_back(name);
    v.doc_text.emplace(name, doc);
  }
  for (const auto& [name, doc] : kFeatureProcessors) {
    v.feature_processors.emplace_back(name);
    v.doc_text.emplace(name, doc);
  }
  return v;
}

PrimitiveVocabulary PrimitiveVocabulary::load(const std::string& path) {
  const std::string doc = text::read_file(path);
  text::LineReader reader(doc);
  PrimitiveVocabulary v;
  std::string_view line;
  while (reader.next(line)) {
    if (text::trim(line).empty() || line.front() == '#') continue;
    const auto fields = text::split(line, '\t');
    if (fields.size() != 3) {
      throw ParseError("vocabulary line needs 3 tab-separated fields", reader.line_number());
    }
    const std::string name(fields[1]);
    if (fields[0] == "estimator") {
      v.estimators.push_back(name);
    } else if (fields[0] == "feature_processor") {
      v.feature_processors.push_back(name);
    } else {
      throw ParseError("unknown primitive kind '" + std::string(fields[0]) + "'",
                       reader.line_number());
    }
    v.doc_text[name] = std::string(fields[2]);
  }
  v.validate();
  return v;
}

std::optional<std::size_t> PrimitiveVocabulary::find_estimator(std::string_view name) const {
  return find_in(estimators, name);
}

std::optional<std::size_t> PrimitiveVocabulary::find_feature_processor(
    std::string_view name) const {
  return find_in(feature_processors, name);
}

std::size_t PrimitiveVocabulary::estimator_index(std::string_view name) const {
  if (auto i = find_estimator(name)) return *i;
  throw DataError("estimator '" + std::string(name) + "' is not in the vocabulary");
}

std::size_t PrimitiveVocabulary::feature_processor_index(std::string_view name) const {
  if (auto i = find_feature_processor(name)) return *i;
  throw DataError("feature processor '" + std::string(name) + "' is not in the vocabulary");
}

PipelineLabel PrimitiveVocabulary::label(std::string_view feature_processor,
                                         std::string_view estimator) const {
  return {feature_processor_index(feature_processor), estimator_index(estimator)};
}

std::string PrimitiveVocabulary::describe(const PipelineLabel& label) const {
  if (!contains(label)) return "<invalid label>";
  return feature_processors[label.feature_processor] + "+" + estimators[label.estimator];
}

void PrimitiveVocabulary::validate() const {
  if (estimators.empty() || feature_processors.empty()) {
    throw DataError("vocabulary needs at least one estimator and one feature processor");
  }
  std::set<std::string_view> seen;
  for (const auto& list : {&estimators, &feature_processors}) {
    std::set<std::string_view> local;
    for (const auto& n : *list) {
      if (!local.insert(n).second) throw DataError("duplicate primitive name '" + n + "'");
      if (!seen.insert(n).second) {
        throw DataError("primitive '" + n + "' is both an estimator and a feature processor");
      }
    }
  }
}

}  // namespace zeroshot
