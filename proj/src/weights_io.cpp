#include "rcid/weights_io.hpp"

#include <bit>
#include <cstring>
#include <fstream>

#include "json_util.hpp"

namespace rcid {

namespace {

constexpr char kMagic[8] = {'R', 'C', 'I', 'D', 'N', 'E', 'T', '\0'};

template <typename T>
void put(std::vector<std::uint8_t>& out, T v) {
  std::uint8_t b[sizeof(T)];
  std::memcpy(b, &v, sizeof(T));
  if constexpr (std::endian::native == std::endian::big) std::reverse(b, b + sizeof(T));
  out.insert(out.end(), b, b + sizeof(T));
}

class Reader {
 public:
  Reader(const std::vector<std::uint8_t>& bytes, const std::string& source)
      : bytes_(bytes), source_(source) {}

  template <typename T>
  T get(const char* what) {
    if (pos_ + sizeof(T) > bytes_.size()) fail(std::string("truncated while reading ") + what);
    std::uint8_t b[sizeof(T)];
    std::memcpy(b, bytes_.data() + pos_, sizeof(T));
    if constexpr (std::endian::native == std::endian::big) std::reverse(b, b + sizeof(T));
    pos_ += sizeof(T);
    T v;
    std::memcpy(&v, b, sizeof(T));
    return v;
  }

  void expect_magic() {
    if (bytes_.size() < sizeof kMagic || std::memcmp(bytes_.data(), kMagic, sizeof kMagic) != 0) {
      fail("not an estimator weights file (bad magic)");
    }
    pos_ = sizeof kMagic;
  }

  bool at_end() const { return pos_ == bytes_.size(); }

  [[noreturn]] void fail(const std::string& what) const {
    throw InvalidInput(source_ + ": " + what);
  }

 private:
  const std::vector<std::uint8_t>& bytes_;
  const std::string& source_;
  std::size_t pos_ = 0;
};

}  // namespace

std::vector<std::uint8_t> serialize_weights(const EstimatorNet& net) {
  std::vector<std::uint8_t> out(kMagic, kMagic + sizeof kMagic);
  const auto& shape = net.shape();
  const auto& st = net.standardization();
  put<std::uint32_t>(out, kWeightsFormatVersion);
  put<std::uint32_t>(out, net.topology() == Topology::OneROneC ? 0 : 1);
  put<std::uint32_t>(out, 0);  // tanh
  put<std::uint32_t>(out, static_cast<std::uint32_t>(shape.lookback));
  put<std::uint32_t>(out, static_cast<std::uint32_t>(kFeatureCount));
  put<std::uint32_t>(out, static_cast<std::uint32_t>(shape.hidden_layers));
  put<std::uint32_t>(out, static_cast<std::uint32_t>(shape.hidden_width));
  put<std::uint32_t>(out, static_cast<std::uint32_t>(net.output_size()));
  put<double>(out, st.temp_center);
  put<double>(out, st.temp_scale);
  put<double>(out, st.u_scale);
  put<double>(out, st.q_scale);
  for (Eigen::Index i = 0; i < net.output_scale().size(); ++i) put<double>(out, net.output_scale()(i));
  put<std::uint32_t>(out, static_cast<std::uint32_t>(net.tensors().size()));
  for (const auto& t : net.tensors()) {
    put<std::uint32_t>(out, static_cast<std::uint32_t>(t.rows()));
    put<std::uint32_t>(out, static_cast<std::uint32_t>(t.cols()));
    for (Eigen::Index r = 0; r < t.rows(); ++r) {
      for (Eigen::Index c = 0; c < t.cols(); ++c) put<double>(out, t(r, c));
    }
  }
  return out;
}

EstimatorNet deserialize_weights(const std::vector<std::uint8_t>& bytes, const std::string& source) {
  Reader in(bytes, source);
  in.expect_magic();
  const auto version = in.get<std::uint32_t>("version");
  if (version != kWeightsFormatVersion) {
    in.fail("unsupported format version " + std::to_string(version));
  }
  const auto topo_tag = in.get<std::uint32_t>("topology");
  if (topo_tag > 1) in.fail("unknown topology tag " + std::to_string(topo_tag));
  const Topology topo = topo_tag == 0 ? Topology::OneROneC : Topology::TwoRTwoC;
  if (in.get<std::uint32_t>("activation") != 0) in.fail("unknown activation tag");
  NetShape shape;
  shape.lookback = in.get<std::uint32_t>("lookback");
  if (in.get<std::uint32_t>("features") != kFeatureCount) in.fail("feature count mismatch");
  shape.hidden_layers = in.get<std::uint32_t>("hidden_layers");
  shape.hidden_width = in.get<std::uint32_t>("hidden_width");
  const auto out_size = in.get<std::uint32_t>("output_size");
  if (out_size != param_count(topo)) in.fail("output size does not match topology");
  Standardization st;
  st.temp_center = in.get<double>("temp_center");
  st.temp_scale = in.get<double>("temp_scale");
  st.u_scale = in.get<double>("u_scale");
  st.q_scale = in.get<double>("q_scale");
  diffkit::Vector scale(out_size);
  for (std::uint32_t i = 0; i < out_size; ++i) scale(i) = in.get<double>("output scale");
  EstimatorNet net(topo, scale, st, shape);
  const auto count = in.get<std::uint32_t>("tensor_count");
  if (count != net.tensors().size()) in.fail("tensor count does not match the declared shape");
  for (auto& t : net.tensors()) {
    const auto rows = in.get<std::uint32_t>("rows");
    const auto cols = in.get<std::uint32_t>("cols");
    if (rows != t.rows() || cols != t.cols()) in.fail("tensor shape does not match the header");
    for (Eigen::Index r = 0; r < t.rows(); ++r) {
      for (Eigen::Index c = 0; c < t.cols(); ++c) t(r, c) = in.get<double>("tensor data");
    }
  }
  if (!in.at_end()) in.fail("trailing bytes after the last tensor");
  return net;
}

std::string weights_sidecar_json(const EstimatorNet& net, const ArtifactStamp& stamp) {
  detail::Json j;
  j["format_version"] = kWeightsFormatVersion;
  j["topology"] = std::string(to_string(net.topology()));
  j["activation"] = net.activation();
  j["lookback"] = net.shape().lookback;
  j["features"] = kFeatureCount;
  j["hidden_layers"] = net.shape().hidden_layers;
  j["hidden_width"] = net.shape().hidden_width;
  j["output_size"] = net.output_size();
  const auto& st = net.standardization();
  j["standardization"] = {{"temp_center", st.temp_center},
                          {"temp_scale", st.temp_scale},
                          {"u_scale", st.u_scale},
                          {"q_scale", st.q_scale}};
  std::vector<double> scale(net.output_scale().data(),
                            net.output_scale().data() + net.output_scale().size());
  j["output_scale"] = scale;
  detail::Json shapes = detail::Json::array();
  for (const auto& t : net.tensors()) shapes.push_back({t.rows(), t.cols()});
  j["tensor_shapes"] = shapes;
  j["config_hash"] = stamp.config_hash;
  j["master_seed"] = stamp.master_seed;
  return j.dump(2) + "\n";
}

void save_weights(const std::filesystem::path& path, const EstimatorNet& net,
                  const ArtifactStamp& stamp) {
  const auto bytes = serialize_weights(net);
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot open '" + path.string() + "' for writing");
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw IoError("write failed for '" + path.string() + "'");
  detail::write_text(path.string() + ".json", weights_sidecar_json(net, stamp));
}

EstimatorNet load_weights(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open '" + path.string() + "' for reading");
  std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)),
                                  std::istreambuf_iterator<char>());
  return deserialize_weights(bytes, path.string());
}

}  // namespace rcid
