# Sub-commands of the vqaa-chain CLI
