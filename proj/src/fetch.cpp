#include "nsdt/fetch.hpp"

#include "nsdt/common.hpp"
#include "nsdt/data.hpp"

#define CPPHTTPLIB_OPENSSL_SUPPORT
#include <httplib.h>
#include <zlib.h>

#include <filesystem>
#include <fstream>
#include <regex>

namespace nsdt {

namespace fs = std::filesystem;

std::string gunzip_bytes(const std::string& compressed) {
  z_stream stream{};
  if (inflateInit2(&stream, 15 + 16) != Z_OK) throw NsdtError("gunzip: inflateInit failed");
  std::string out;
  std::vector<char> buffer(1 << 16);
  stream.next_in = reinterpret_cast<Bytef*>(const_cast<char*>(compressed.data()));
  stream.avail_in = static_cast<uInt>(compressed.size());
  int rc = Z_OK;
  while (rc != Z_STREAM_END) {
    stream.next_out = reinterpret_cast<Bytef*>(buffer.data());
    stream.avail_out = static_cast<uInt>(buffer.size());
    rc = inflate(&stream, Z_NO_FLUSH);
    if (rc != Z_OK && rc != Z_STREAM_END) {
      inflateEnd(&stream);
      throw NsdtError("gunzip: corrupt stream");
    }
    out.append(buffer.data(), buffer.size() - stream.avail_out);
  }
  inflateEnd(&stream);
  return out;
}

namespace {

struct RemoteFile {
  std::string url;
  std::string target_name;  // name under data_dir/<id>/
  bool gzipped = false;
};

bool download(const RemoteFile& remote, const fs::path& dir, std::string* error) {
  static const std::regex url_re(R"(^(https?)://([^/]+)(/.*)$)");
  std::smatch m;
  if (!std::regex_match(remote.url, m, url_re)) {
    *error = "malformed url: " + remote.url;
    return false;
  }
  const std::string scheme = m[1], host = m[2], path = m[3];
  httplib::Result res = [&] {
    if (scheme == "https") {
      httplib::SSLClient client(host);
      client.set_connection_timeout(20);
      client.set_read_timeout(60);
      client.set_follow_location(true);
      return client.Get(path);
    }
    httplib::Client client(host);
    client.set_connection_timeout(20);
    client.set_read_timeout(60);
    client.set_follow_location(true);
    return client.Get(path);
  }();
  if (!res || res->status != 200) {
    *error = remote.url + ": " +
             (res ? "http status " + std::to_string(res->status) : "connection failed");
    return false;
  }
  std::string body = res->body;
  if (remote.gzipped) body = gunzip_bytes(body);
  fs::create_directories(dir);
  std::ofstream out(dir / remote.target_name, std::ios::binary);
  out << body;
  return static_cast<bool>(out);
}

}  // namespace

FetchResult fetch_dataset(const std::string& dataset_id, const std::string& data_dir) {
  const DatasetSchema& schema = dataset_schema(dataset_id);  // validates the id
  FetchResult result;
  const fs::path dir = fs::path(data_dir) / dataset_id;

  std::vector<RemoteFile> remotes;
  if (dataset_id == "census") {
    remotes = {{"https://archive.ics.uci.edu/ml/machine-learning-databases/census-income-mld/"
                "census-income.data.gz",
                "census-income.data", true},
               {"https://archive.ics.uci.edu/ml/machine-learning-databases/census-income-mld/"
                "census-income.test.gz",
                "census-income.test", true}};
  } else if (dataset_id == "higgs") {
    remotes = {{"https://www.openml.org/data/download/2063675/higgs.csv", "higgs.csv", false}};
  } else {
    result.message = dataset_id +
                     " is published behind an authenticated host; download " +
                     schema.source_urls.front() + " manually into " + dir.string() +
                     "/ or generate a synthetic stand-in with the synth command";
    return result;
  }

  std::string errors;
  for (const RemoteFile& remote : remotes) {
    std::string error;
    if (!download(remote, dir, &error)) {
      errors += (errors.empty() ? "" : "; ") + error;
      continue;
    }
    result.files.push_back((dir / remote.target_name).string());
  }
  result.ok = result.files.size() == remotes.size();
  result.message = result.ok ? "fetched " + std::to_string(result.files.size()) + " file(s)"
                             : "fetch incomplete: " + errors;
  return result;
}

}  // namespace nsdt
