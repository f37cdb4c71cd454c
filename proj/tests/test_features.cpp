#include <doctest.h>

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <limits>
#include <random>

#include "oracles.hpp"

using namespace mmrec;
namespace fs = std::filesystem;

namespace {

struct TempDir {
  fs::path path;
  explicit TempDir(const std::string& name) : path(fs::temp_directory_path() / name) {
    fs::remove_all(path);
    fs::create_directories(path);
  }
  ~TempDir() { fs::remove_all(path); }
};

Matrix mat(std::initializer_list<std::initializer_list<double>> rows) {
  Matrix m(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(rows.begin()->size()));
  Eigen::Index r = 0;
  for (const auto& row : rows) {
    Eigen::Index c = 0;
    for (double v : row) m(r, c++) = v;
    ++r;
  }
  return m;
}

void write_ids(const fs::path& p, const std::vector<std::string>& ids) {
  std::ofstream out(p);
  for (const auto& id : ids) out << id << '\n';
}

ModalityTable table(ModalityKind kind, Matrix m) {
  ModalityTable t;
  t.kind = kind;
  t.present_mask.assign(static_cast<std::size_t>(m.rows()), true);
  t.features = std::move(m);
  return t;
}

}  // namespace

TEST_CASE("MMF1 layout is bit-exact") {
  TempDir dir("mmrec_mmf_layout");
  write_matrix_file(dir.path / "m.mmf1", mat({{1, 2, 3}, {4, 5, 6}}), MatrixPrecision::f32);
  std::ifstream in(dir.path / "m.mmf1", std::ios::binary);
  std::vector<unsigned char> bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  REQUIRE(bytes.size() == 12 + 6 * 4);
  CHECK(std::string(bytes.begin(), bytes.begin() + 4) == "MMF1");
  CHECK(bytes[4] == 2);
  CHECK(bytes[5] == 0);
  CHECK(bytes[8] == 3);
  // 1.0f = 0x3F800000 little-endian
  CHECK(bytes[12] == 0x00);
  CHECK(bytes[13] == 0x00);
  CHECK(bytes[14] == 0x80);
  CHECK(bytes[15] == 0x3F);
}

TEST_CASE("load_feature_matrix reads back and rejects bad input") {
  TempDir dir("mmrec_load_fm");
  write_matrix_file(dir.path / "m.mmf1", mat({{1, 2, 3}, {4, 5, 6}}), MatrixPrecision::f32);
  write_ids(dir.path / "ids.txt", {"iA", "iB"});
  const auto fm = load_feature_matrix(dir.path / "m.mmf1", dir.path / "ids.txt");
  CHECK(fm.rows() == 2);
  CHECK(fm.dim() == 3);
  CHECK(fm.values(1, 2) == 6.0);
  CHECK(fm.row_ids == std::vector<std::string>{"iA", "iB"});

  write_ids(dir.path / "ids3.txt", {"iA", "iB", "iC"});
  CHECK_THROWS_AS(load_feature_matrix(dir.path / "m.mmf1", dir.path / "ids3.txt"), DimensionMismatch);

  Matrix with_nan = mat({{1, 2, 3}, {4, 5, 6}});
  with_nan(0, 1) = std::numeric_limits<double>::quiet_NaN();
  write_matrix_file(dir.path / "nan.mmf1", with_nan, MatrixPrecision::f32);
  try {
    load_feature_matrix(dir.path / "nan.mmf1", dir.path / "ids.txt");
    FAIL("expected NonFiniteValue");
  } catch (const NonFiniteValue& e) {
    CHECK(e.row() == 0);
    CHECK(e.col() == 1);
  }

  {
    std::ofstream bad(dir.path / "bad.mmf1", std::ios::binary);
    bad << "XXXX\x02\0\0\0";
  }
  CHECK_THROWS_AS(load_feature_matrix(dir.path / "bad.mmf1", dir.path / "ids.txt"), BadMagic);
}

TEST_CASE("align_features: imputation policies and permutation") {
  const IdMap items({"a", "b"});
  FeatureMatrix fm{mat({{1, 2}}), {"a"}};
  const auto zeros = align_features(fm, ModalityKind::text, items, ImputePolicy::zeros);
  CHECK(zeros.features == mat({{1, 2}, {0, 0}}));
  CHECK(zeros.present_mask == std::vector<bool>{true, false});
  const auto mean = align_features(fm, ModalityKind::text, items, ImputePolicy::mean);
  CHECK(mean.features == mat({{1, 2}, {1, 2}}));

  FeatureMatrix full{mat({{3, 4}, {1, 2}, {9, 9}}), {"b", "a", "zz"}};
  const auto aligned = align_features(full, ModalityKind::image, items);
  CHECK(aligned.features == mat({{1, 2}, {3, 4}}));
  CHECK(aligned.present_mask == std::vector<bool>{true, true});

  FeatureMatrix none{mat({{1, 1}}), {"q"}};
  CHECK_THROWS_AS(align_features(none, ModalityKind::text, items), AllMissing);
}

TEST_CASE("align is idempotent in dense space and values stay finite") {
  std::mt19937 gen(4);
  std::normal_distribution<double> nd;
  std::vector<std::string> ids;
  for (int i = 0; i < 20; ++i) ids.push_back("it" + std::to_string(100 + i));
  const IdMap items(ids);
  FeatureMatrix fm;
  fm.values = Matrix(12, 5);
  for (int r = 0; r < 12; ++r) {
    fm.row_ids.push_back(ids[static_cast<std::size_t>(r * 17 % 20)]);
    for (int c = 0; c < 5; ++c) fm.values(r, c) = nd(gen);
  }
  for (auto policy : {ImputePolicy::zeros, ImputePolicy::mean}) {
    const auto once = align_features(fm, ModalityKind::audio, items, policy);
    CHECK(once.features.allFinite());
    const auto twice = align_features(to_feature_matrix(once, items), ModalityKind::audio, items, policy);
    CHECK(twice.features == once.features);
  }
}

TEST_CASE("standardize_columns uses present-row statistics") {
  ModalityTable t;
  t.kind = ModalityKind::text;
  t.features = mat({{1, 5}, {3, 5}, {0, 0}});
  t.present_mask = {true, true, false};
  standardize_columns(t);
  CHECK(t.features(0, 0) == doctest::Approx(-1.0));
  CHECK(t.features(1, 0) == doctest::Approx(1.0));
  CHECK(t.features(2, 0) == doctest::Approx(-2.0));
  CHECK(t.features(0, 1) == doctest::Approx(0.0));  // constant column centred only
  CHECK(t.features.allFinite());
}

TEST_CASE("fuse: concat order, element-wise reductions, identities and errors") {
  const auto text = table(ModalityKind::text, mat({{1, 3}}));
  const auto image = table(ModalityKind::image, mat({{3, 5, 7}}));
  const Matrix concat = fuse({image, text}, FusionMethod::concat);
  CHECK(concat == mat({{1, 3, 3, 5, 7}}));

  const auto image2 = table(ModalityKind::image, mat({{3, 5}}));
  CHECK(fuse({text, image2}, FusionMethod::sum) == mat({{4, 8}}));
  CHECK(fuse({text, image2}, FusionMethod::mean) == mat({{2, 4}}));

  const auto zero = table(ModalityKind::video, Matrix::Zero(1, 2));
  CHECK(fuse({zero, text}, FusionMethod::sum) == text.features);

  CHECK_THROWS_AS(fuse({}, FusionMethod::sum), EmptyList);
  CHECK_THROWS_AS(fuse({text, image}, FusionMethod::sum), DimMismatch);
  CHECK_THROWS_AS(fuse({text, text}, FusionMethod::concat), InvalidArgument);
}

TEST_CASE("fuse is permutation invariant") {
  std::mt19937 gen(8);
  std::normal_distribution<double> nd;
  std::vector<ModalityTable> tables;
  for (auto kind : kAllModalities) {
    Matrix m(6, 3);
    for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = nd(gen);
    tables.push_back(table(kind, m));
  }
  const Matrix sum = fuse(tables, FusionMethod::sum);
  const Matrix mean = fuse(tables, FusionMethod::mean);
  const Matrix concat = fuse(tables, FusionMethod::concat);
  auto perm = tables;
  for (int trial = 0; trial < 10; ++trial) {
    std::shuffle(perm.begin(), perm.end(), gen);
    CHECK(fuse(perm, FusionMethod::sum) == sum);
    CHECK(fuse(perm, FusionMethod::mean) == mean);
    CHECK(fuse(perm, FusionMethod::concat) == concat);
  }
  CHECK(concat.leftCols(3) == tables[0].features);
  CHECK(concat.rightCols(3) == tables[3].features);
}
