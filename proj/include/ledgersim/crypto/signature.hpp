#pragma once

#include "ledgersim/core/bytes.hpp"
#include "ledgersim/crypto/keccak.hpp"

#include <map>
#include <optional>
#include <stdexcept>

namespace ledgersim::crypto {

struct KeyPair {
    Secret secret;
    PublicId public_id;
    Address address;

    /// publicId = keccak256(secret); address = last 20 bytes of keccak256(publicId).
    static KeyPair from_seed(const Secret& seed) {
        KeyPair k;
        k.secret = seed;
        k.public_id = keccak256(seed.view());
        auto h = keccak256(k.public_id.view());
        k.address = Address::from_span(ByteView(h.bytes).subspan(12));
        return k;
    }

    friend bool operator==(const KeyPair&, const KeyPair&) = default;
};

class UnknownPublicId : public std::out_of_range {
  public:
    explicit UnknownPublicId(const PublicId& id) : std::out_of_range("unknown public id " + id.hex()) {}
};

/// Pluggable signing contract. Consensus and execution only talk to this
/// interface; the key registry lives with the scheme.
class SignatureScheme {
  public:
    virtual ~SignatureScheme() = default;

    virtual void register_key(const KeyPair& key) = 0;
    virtual SignatureBytes sign(const KeyPair& key, const Hash256& digest) const = 0;
    /// Throws UnknownPublicId when the public id was never registered.
    virtual bool verify(const PublicId& public_id, const Hash256& digest, const SignatureBytes& sig) const = 0;
    virtual std::optional<PublicId> public_id_of(const Address& address) const = 0;

    bool verify_from(const Address& signer, const Hash256& digest, const SignatureBytes& sig) const {
        auto id = public_id_of(signer);
        return id && verify(*id, digest, sig);
    }
};

/// Keyed-hash mock: sig = keccak256(secret || digest). Verification
/// re-derives the tag from the registered secret, which is acceptable only
/// because the simulator holds every key.
class KeyedHashScheme final : public SignatureScheme {
  public:
    void register_key(const KeyPair& key) override {
        secrets_[key.public_id] = key.secret;
        ids_[key.address] = key.public_id;
    }

    SignatureBytes sign(const KeyPair& key, const Hash256& digest) const override {
        return tag(key.secret, digest);
    }

    bool verify(const PublicId& public_id, const Hash256& digest, const SignatureBytes& sig) const override {
        auto it = secrets_.find(public_id);
        if (it == secrets_.end()) throw UnknownPublicId(public_id);
        return sig == tag(it->second, digest);
    }

    std::optional<PublicId> public_id_of(const Address& address) const override {
        auto it = ids_.find(address);
        if (it == ids_.end()) return std::nullopt;
        return it->second;
    }

  private:
    static SignatureBytes tag(const Secret& secret, const Hash256& digest) {
        auto h = Keccak256{}.update(secret.view()).update(digest.view()).finish();
        return SignatureBytes(h.bytes.begin(), h.bytes.end());
    }

    std::map<PublicId, Secret> secrets_;
    std::map<Address, PublicId> ids_;
};

} // namespace ledgersim::crypto
